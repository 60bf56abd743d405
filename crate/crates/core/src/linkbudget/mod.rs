//! THz link budget: antenna gain, path loss, Shannon rate and the
//! illumination radius of a single access point.
//!
//! Everything here works in linear units (W, W/Hz, Hz, m). Decibel values are
//! converted once at the configuration boundary with [`db_to_linear`] and
//! [`dbm_to_watts`].

mod absorption;
mod lambert;

pub use absorption::{AbsorptionRow, AbsorptionTable};
pub use lambert::{lambert_w0, BRANCH_POINT};

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Numerator of the uniformly illuminated circular aperture gain law.
pub const APERTURE_GAIN_CONSTANT: f64 = 52_525.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Radio and channel parameters for one AP-to-user link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub f_c_hz: f64,
    pub bandwidth_hz: f64,
    /// Transmit power of one AP, W.
    pub p_t_w: f64,
    pub delta_t_deg: f64,
    pub delta_r_deg: f64,
    /// Noise power spectral density, W/Hz.
    pub n_f_w_per_hz: f64,
    /// Relative humidity as a fraction.
    pub humidity: f64,
    /// Carried for completeness; the bundled absorption table ignores it.
    pub temperature_c: f64,
    /// Absorption coefficient (1/m) that bypasses the table when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_override: Option<f64>,
}

impl LinkBudgetParams {
    /// Single-AP defaults: 570 GHz, 10 GHz bandwidth, 0 dBm, 10° beams on both
    /// ends, -193.85 dB/Hz noise density, 60 % RH, 25 °C.
    pub fn table1() -> Self {
        Self {
            f_c_hz: 570e9,
            bandwidth_hz: 10e9,
            p_t_w: dbm_to_watts(0.0),
            delta_t_deg: 10.0,
            delta_r_deg: 10.0,
            n_f_w_per_hz: db_to_linear(-193.85),
            humidity: 0.6,
            temperature_c: 25.0,
            tau_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("f_c", self.f_c_hz)?;
        positive("bandwidth", self.bandwidth_hz)?;
        positive("p_t", self.p_t_w)?;
        positive("n_f", self.n_f_w_per_hz)?;
        for (name, d) in [("delta_t", self.delta_t_deg), ("delta_r", self.delta_r_deg)] {
            if !(d > 0.0 && d <= 360.0) {
                return Err(Error::config(name, format!("beamwidth must be in (0, 360], got {d}")));
            }
        }
        if !(0.0..=1.0).contains(&self.humidity) {
            return Err(Error::config("humidity", format!("must be in [0, 1], got {}", self.humidity)));
        }
        if !self.temperature_c.is_finite() {
            return Err(Error::config("temperature", "must be finite"));
        }
        if let Some(tau) = self.tau_override {
            if !(tau >= 0.0 && tau.is_finite()) {
                return Err(Error::config("tau_override", format!("must be >= 0, got {tau}")));
            }
        }
        Ok(())
    }

    pub fn with_power(&self, p_t_w: f64) -> Self {
        Self { p_t_w, ..self.clone() }
    }
}

/// Conical main-lobe gain `52525 / delta^2` for a beamwidth in degrees.
pub fn antenna_gain(delta_deg: f64) -> Result<f64> {
    if !(delta_deg > 0.0 && delta_deg <= 360.0) {
        return Err(Error::domain("antenna_gain", format!("beamwidth {delta_deg} not in (0, 360]")));
    }
    Ok(APERTURE_GAIN_CONSTANT / (delta_deg * delta_deg))
}

/// Medium absorption coefficient in 1/m.
pub fn absorption_coefficient(params: &LinkBudgetParams) -> Result<f64> {
    match params.tau_override {
        Some(tau) => Ok(tau),
        None => AbsorptionTable::bundled().tau(params.f_c_hz, params.humidity),
    }
}

/// `(4 pi f / c)^2`, the spreading loss at one metre.
fn spreading_per_m2(f_c_hz: f64) -> f64 {
    let k = 4.0 * PI * f_c_hz / SPEED_OF_LIGHT;
    k * k
}

/// Total path loss (linear): free-space spreading times `exp(tau d)`.
pub fn total_path_loss(d: f64, params: &LinkBudgetParams) -> Result<f64> {
    LinkModel::new(params)?.path_loss(d)
}

/// Shannon rate in bit/s at distance `d`.
pub fn achievable_rate(d: f64, params: &LinkBudgetParams) -> Result<f64> {
    LinkModel::new(params)?.rate(d)
}

/// The `K` constant of `r^2 exp(tau r) = K`: the squared distance at which the
/// free-space SNR equals `2^S - 1`.
pub fn radius_constant(params: &LinkBudgetParams, spectral_efficiency: f64) -> Result<f64> {
    if !(spectral_efficiency > 0.0 && spectral_efficiency.is_finite()) {
        return Err(Error::domain(
            "coverage_radius",
            format!("spectral efficiency must be positive, got {spectral_efficiency}"),
        ));
    }
    let model = LinkModel::new(params)?;
    let snr_target = (spectral_efficiency * LN_2).exp_m1();
    let k = model.snr_numerator / (model.spreading * snr_target);
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain("coverage_radius", format!("K = {k} is not positive")));
    }
    Ok(k)
}

/// Distance (m) at which the achievable rate drops to `S * B`.
///
/// Closed form through the principal Lambert W branch:
/// `r = 2 W0(tau sqrt(K) / 2) / tau`, and `r = sqrt(K)` without absorption.
pub fn coverage_radius(params: &LinkBudgetParams, spectral_efficiency: f64) -> Result<f64> {
    let k = radius_constant(params, spectral_efficiency)?;
    let tau = absorption_coefficient(params)?;
    let root_k = k.sqrt();
    if tau == 0.0 {
        return Ok(root_k);
    }
    Ok(2.0 * lambert_w0(tau * root_k / 2.0)? / tau)
}

/// [`coverage_radius`] rounded up to a whole metre.
pub fn coverage_radius_ceiled(params: &LinkBudgetParams, spectral_efficiency: f64) -> Result<f64> {
    coverage_radius(params, spectral_efficiency).map(f64::ceil)
}

/// Bisection on `r^2 exp(tau r) - K`, used to cross-check the closed form.
pub fn coverage_radius_bruteforce(params: &LinkBudgetParams, spectral_efficiency: f64) -> Result<f64> {
    let k = radius_constant(params, spectral_efficiency)?;
    let tau = absorption_coefficient(params)?;
    let g = |r: f64| r * r * (tau * r).exp() - k;
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo >= 1e-9 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A link budget with every distance-independent factor folded in, for hot
/// loops that evaluate many distances under the same parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub bandwidth_hz: f64,
    pub tau: f64,
    /// `(4 pi f / c)^2`.
    pub spreading: f64,
    /// `P_t G_t G_r / (N_f B)`.
    pub snr_numerator: f64,
    /// `P_t G_t G_r`.
    pub eirp_gain: f64,
}

impl LinkModel {
    pub fn new(params: &LinkBudgetParams) -> Result<Self> {
        params.validate()?;
        let tau = absorption_coefficient(params)?;
        let gains = antenna_gain(params.delta_t_deg)? * antenna_gain(params.delta_r_deg)?;
        let eirp_gain = params.p_t_w * gains;
        Ok(Self {
            bandwidth_hz: params.bandwidth_hz,
            tau,
            spreading: spreading_per_m2(params.f_c_hz),
            snr_numerator: eirp_gain / (params.n_f_w_per_hz * params.bandwidth_hz),
            eirp_gain,
        })
    }

    fn check_distance(op: &'static str, d: f64) -> Result<()> {
        if d > 0.0 && d.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(op, format!("distance must be positive, got {d}")))
        }
    }

    pub fn path_loss(&self, d: f64) -> Result<f64> {
        Self::check_distance("total_path_loss", d)?;
        Ok(self.path_loss_unchecked(d))
    }

    pub fn rate(&self, d: f64) -> Result<f64> {
        Self::check_distance("achievable_rate", d)?;
        Ok(self.rate_unchecked(d))
    }

    #[inline]
    pub fn path_loss_unchecked(&self, d: f64) -> f64 {
        self.spreading * d * d * (self.tau * d).exp()
    }

    #[inline]
    pub fn snr_unchecked(&self, d: f64) -> f64 {
        self.snr_numerator / self.path_loss_unchecked(d)
    }

    #[inline]
    pub fn rate_unchecked(&self, d: f64) -> f64 {
        self.bandwidth_hz * self.snr_unchecked(d).ln_1p() / LN_2
    }

    /// Received power, W.
    #[inline]
    pub fn received_power(&self, d: f64) -> f64 {
        self.eirp_gain / self.path_loss_unchecked(d)
    }
}
