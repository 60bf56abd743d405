//! Configuration file schema.
//!
//! TOML with five sections. Every key is optional and defaults to the
//! reference parameter set; unknown keys are rejected. Logarithmic units
//! (dBm, dB/Hz) and engineering prefixes (GHz, Gbps, ms, %) exist only
//! here and are converted once by [`ConfigFile::to_sim_config`].
//!
//! ```toml
//! [link]
//! f_c_ghz = 570.0
//! bandwidth_ghz = 10.0
//! p_o_dbm = 0.0
//! beamwidth_deg = 10.0
//! nf_db_hz = -193.85
//! humidity_pct = 60.0
//! temperature_c = 25.0
//! # tau_per_m = 0.45
//! # absorption_table = "my_table.csv"
//!
//! [room]
//! room_l_m = 10.0
//! room_w_m = 10.0
//! room_h_m = 3.0
//!
//! [placement]
//! type = "B"
//! n_aps = 4
//! t_align_ms = 5.0
//! # h_eff_m = 4.5
//! # constellation_file = "layout.csv"
//!
//! [users]
//! n_users = 30
//! velocity_mps_mean = 1.0
//! velocity_mps_span = 0.5
//! pause_s = 0.0
//! user_height_m = 1.5
//! user_width_m = 0.2
//! body_height_span_m = 0.2
//! rate_min_gbps = 1.0
//! rate_max_gbps = 10.0
//!
//! [sim]
//! seed = 1
//! duration_s = 60.0
//! dt_ms = 10.0
//! blockage = false
//! multiplexing = "time-share"
//! # realign_interval_s = 0.1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Constellation, PlacementType, Room};
use crate::linkbudget::{db_to_linear, dbm_to_watts, AbsorptionTable, LinkBudgetParams};
use crate::mobility::MobilityParams;
use crate::simulation::{Multiplexing, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub f_c_ghz: f64,
    pub bandwidth_ghz: f64,
    pub p_o_dbm: f64,
    pub beamwidth_deg: f64,
    /// Receive beamwidth; the transmit value when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beamwidth_rx_deg: Option<f64>,
    pub nf_db_hz: f64,
    pub humidity_pct: f64,
    pub temperature_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_table: Option<PathBuf>,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            f_c_ghz: 570.0,
            bandwidth_ghz: 10.0,
            p_o_dbm: 0.0,
            beamwidth_deg: 10.0,
            beamwidth_rx_deg: None,
            nf_db_hz: -193.85,
            humidity_pct: 60.0,
            temperature_c: 25.0,
            tau_per_m: None,
            absorption_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSection {
    pub room_l_m: f64,
    pub room_w_m: f64,
    pub room_h_m: f64,
}

impl Default for RoomSection {
    fn default() -> Self {
        Self { room_l_m: 10.0, room_w_m: 10.0, room_h_m: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementSection {
    #[serde(rename = "type")]
    pub placement_type: String,
    pub n_aps: usize,
    pub t_align_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_eff_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constellation_file: Option<PathBuf>,
}

impl Default for PlacementSection {
    fn default() -> Self {
        Self { placement_type: "B".into(), n_aps: 4, t_align_ms: 5.0, h_eff_m: None, constellation_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersSection {
    pub n_users: usize,
    pub velocity_mps_mean: f64,
    pub velocity_mps_span: f64,
    pub pause_s: f64,
    pub user_height_m: f64,
    pub user_width_m: f64,
    pub body_height_span_m: f64,
    pub rate_min_gbps: f64,
    pub rate_max_gbps: f64,
}

impl Default for UsersSection {
    fn default() -> Self {
        Self {
            n_users: 30,
            velocity_mps_mean: 1.0,
            velocity_mps_span: 0.5,
            pause_s: 0.0,
            user_height_m: 1.5,
            user_width_m: 0.2,
            body_height_span_m: 0.2,
            rate_min_gbps: 1.0,
            rate_max_gbps: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    pub duration_s: f64,
    pub dt_ms: f64,
    pub blockage: bool,
    pub multiplexing: Multiplexing,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realign_interval_s: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            seed: 1,
            duration_s: 60.0,
            dt_ms: 10.0,
            blockage: false,
            multiplexing: Multiplexing::TimeShare,
            realign_interval_s: None,
        }
    }
}

/// Parsed configuration file with every default filled in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub link: LinkSection,
    pub room: RoomSection,
    pub placement: PlacementSection,
    pub users: UsersSection,
    pub sim: SimSection,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

impl ConfigFile {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(path, e.to_string().trim_end()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// Canonical text with all defaults expanded.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config sections serialize to TOML")
    }

    /// Range checks phrased in file keys. Cross-field checks happen in
    /// [`SimConfig::validate`].
    pub fn validate(&self) -> Result<()> {
        let l = &self.link;
        positive("f_c_ghz", l.f_c_ghz)?;
        positive("bandwidth_ghz", l.bandwidth_ghz)?;
        finite("p_o_dbm", l.p_o_dbm)?;
        positive("beamwidth_deg", l.beamwidth_deg)?;
        if let Some(b) = l.beamwidth_rx_deg {
            positive("beamwidth_rx_deg", b)?;
        }
        finite("nf_db_hz", l.nf_db_hz)?;
        if !(0.0..=100.0).contains(&l.humidity_pct) {
            return Err(Error::config("humidity_pct", format!("must lie in [0, 100], got {}", l.humidity_pct)));
        }
        finite("temperature_c", l.temperature_c)?;
        if let Some(t) = l.tau_per_m {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("tau_per_m", format!("must be >= 0, got {t}")));
            }
        }
        positive("room_l_m", self.room.room_l_m)?;
        positive("room_w_m", self.room.room_w_m)?;
        positive("room_h_m", self.room.room_h_m)?;
        positive("t_align_ms", self.placement.t_align_ms)?;
        if let Some(h) = self.placement.h_eff_m {
            positive("h_eff_m", h)?;
        }
        let u = &self.users;
        if !(u.velocity_mps_mean >= 0.0 && u.velocity_mps_mean.is_finite()) {
            return Err(Error::config("velocity_mps_mean", "must be >= 0"));
        }
        if !(u.velocity_mps_span >= 0.0 && u.velocity_mps_span <= u.velocity_mps_mean) {
            return Err(Error::config("velocity_mps_span", "must lie in [0, velocity_mps_mean]"));
        }
        if !(u.pause_s >= 0.0 && u.pause_s.is_finite()) {
            return Err(Error::config("pause_s", "must be >= 0"));
        }
        positive("user_height_m", u.user_height_m)?;
        positive("user_width_m", u.user_width_m)?;
        if !(u.body_height_span_m >= 0.0 && u.body_height_span_m < u.user_height_m) {
            return Err(Error::config("body_height_span_m", "must lie in [0, user_height_m)"));
        }
        positive("rate_min_gbps", u.rate_min_gbps)?;
        if !(u.rate_max_gbps >= u.rate_min_gbps && u.rate_max_gbps.is_finite()) {
            return Err(Error::config("rate_max_gbps", "must be >= rate_min_gbps"));
        }
        positive("duration_s", self.sim.duration_s)?;
        positive("dt_ms", self.sim.dt_ms)?;
        if let Some(p) = self.sim.realign_interval_s {
            positive("realign_interval_s", p)?;
        }
        Ok(())
    }

    /// Converts to internal SI units. Relative file paths resolve against
    /// `base_dir`, normally the config file's directory.
    pub fn to_sim_config(&self, base_dir: &Path) -> Result<SimConfig> {
        self.validate()?;
        let placement: PlacementType = self
            .placement
            .placement_type
            .parse()
            .map_err(|_| Error::config("type", format!("unknown placement `{}`", self.placement.placement_type)))?;
        let l = &self.link;
        let humidity = l.humidity_pct / 100.0;
        let f_c_hz = l.f_c_ghz * 1e9;
        let tau_override = match (&l.tau_per_m, &l.absorption_table) {
            (Some(_), Some(_)) => {
                return Err(Error::config("tau_per_m", "set either tau_per_m or absorption_table, not both"));
            }
            (Some(t), None) => Some(*t),
            (None, Some(path)) => Some(AbsorptionTable::load(&base_dir.join(path))?.tau(f_c_hz, humidity)?),
            (None, None) => None,
        };
        let link = LinkBudgetParams {
            f_c_hz,
            bandwidth_hz: l.bandwidth_ghz * 1e9,
            p_t_w: dbm_to_watts(l.p_o_dbm),
            delta_t_deg: l.beamwidth_deg,
            delta_r_deg: l.beamwidth_rx_deg.unwrap_or(l.beamwidth_deg),
            n_f_w_per_hz: db_to_linear(l.nf_db_hz),
            humidity,
            temperature_c: l.temperature_c,
            tau_override,
        };
        let u = &self.users;
        let mobility = MobilityParams {
            velocity_mean: u.velocity_mps_mean,
            velocity_span: u.velocity_mps_span,
            pause_s: u.pause_s,
            device_height: u.user_height_m,
            body_height_span: u.body_height_span_m,
            user_width: u.user_width_m,
            rate_min_bps: u.rate_min_gbps * 1e9,
            rate_max_bps: u.rate_max_gbps * 1e9,
        };
        let room = Room { length: self.room.room_l_m, width: self.room.room_w_m, height: self.room.room_h_m };
        let mut cfg = SimConfig {
            room,
            placement,
            n_aps: self.placement.n_aps,
            p_o_w: dbm_to_watts(l.p_o_dbm),
            link,
            mobility,
            n_users: u.n_users,
            seed: self.sim.seed,
            duration_s: self.sim.duration_s,
            dt_s: self.sim.dt_ms * 1e-3,
            blockage_enabled: self.sim.blockage,
            t_align_s: self.placement.t_align_ms * 1e-3,
            h_override: self.placement.h_eff_m,
            multiplexing: self.sim.multiplexing,
            realign_interval_s: self.sim.realign_interval_s,
            custom_constellation: None,
        };
        if let Some(file) = &self.placement.constellation_file {
            let path = base_dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let layout = Constellation::from_csv(&text, &cfg.effective_room())?;
            cfg.placement = PlacementType::Custom;
            cfg.n_aps = layout.len();
            cfg.custom_constellation = Some(layout);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
