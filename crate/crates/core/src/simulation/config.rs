use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    matched_height_correction, place_type_a, place_type_b, place_type_c, place_type_d, place_type_e, place_type_f,
    Constellation, PlacementType, Room,
};
use crate::linkbudget::{absorption_coefficient, dbm_to_watts, LinkBudgetParams, LinkModel};
use crate::mobility::MobilityParams;

/// How an AP shares its channel among the users associated with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplexing {
    /// Equal time share: each user gets its link rate divided by the AP's
    /// user count.
    #[default]
    TimeShare,
    /// Only the user with the strongest received power is served.
    StrongestOnly,
}

impl FromStr for Multiplexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-share" => Ok(Multiplexing::TimeShare),
            "strongest-only" => Ok(Multiplexing::StrongestOnly),
            other => Err(Error::config("multiplexing", format!("unknown mode `{other}`"))),
        }
    }
}

/// A placement type paired with an AP count, written `A`, `B4`, `C16`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub placement: PlacementType,
    pub n_aps: usize,
}

impl Scenario {
    pub const fn new(placement: PlacementType, n_aps: usize) -> Self {
        Self { placement, n_aps }
    }

    /// Type A plus Types B and C at 4, 8, 12 and 16 APs.
    pub fn evaluation_set() -> Vec<Scenario> {
        let mut out = vec![Scenario::new(PlacementType::A, 1)];
        for p in [PlacementType::B, PlacementType::C] {
            out.extend([4, 8, 12, 16].map(|n| Scenario::new(p, n)));
        }
        out
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.placement == PlacementType::A {
            write!(f, "A")
        } else {
            write!(f, "{}{}", self.placement, self.n_aps)
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let placement: PlacementType = s[..split].parse()?;
        let n_aps = if split == s.len() {
            if placement == PlacementType::A {
                1
            } else {
                return Err(Error::config("types", format!("`{s}` needs an AP count, e.g. {s}4")));
            }
        } else {
            s[split..].parse().map_err(|_| Error::config("types", format!("bad AP count in `{s}`")))?
        };
        Ok(Self { placement, n_aps })
    }
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub room: Room,
    pub placement: PlacementType,
    pub n_aps: usize,
    /// Total transmit power budget shared by all APs, W.
    pub p_o_w: f64,
    /// Link parameters; `p_t_w` is replaced by `p_o_w / n_aps` for every AP.
    pub link: LinkBudgetParams,
    pub mobility: MobilityParams,
    pub n_users: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub blockage_enabled: bool,
    pub t_align_s: f64,
    /// Effective height `H` replacing `room.height - device_height`.
    pub h_override: Option<f64>,
    pub multiplexing: Multiplexing,
    /// Forces every established link to realign at this period.
    pub realign_interval_s: Option<f64>,
    /// Externally supplied layout; replaces the generated constellation.
    pub custom_constellation: Option<Constellation>,
}

impl SimConfig {
    pub fn table1(placement: PlacementType, n_aps: usize) -> Self {
        Self {
            room: Room::table1(),
            placement,
            n_aps,
            p_o_w: dbm_to_watts(0.0),
            link: LinkBudgetParams::table1(),
            mobility: MobilityParams::table1(),
            n_users: 30,
            seed: 1,
            duration_s: 60.0,
            dt_s: 0.01,
            blockage_enabled: false,
            t_align_s: 5e-3,
            h_override: None,
            multiplexing: Multiplexing::TimeShare,
            realign_interval_s: None,
            custom_constellation: None,
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.placement, self.n_aps)
    }

    pub fn with_scenario(&self, scenario: Scenario) -> Self {
        Self { placement: scenario.placement, n_aps: scenario.n_aps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        let mut link = self.link.clone();
        link.p_t_w = self.per_ap_power();
        if !(self.p_o_w > 0.0 && self.p_o_w.is_finite()) {
            return Err(Error::config("p_o_dbm", format!("total power must be positive, got {} W", self.p_o_w)));
        }
        link.validate()?;
        self.mobility.validate()?;
        match (self.placement, self.n_aps) {
            (PlacementType::A, 1) => {}
            (PlacementType::A, n) => {
                return Err(Error::config("n_aps", format!("Type A uses exactly one AP, got {n}")));
            }
            (PlacementType::Custom, _) => {}
            (_, 4 | 8 | 12 | 16) => {}
            (p, n) => {
                return Err(Error::config("n_aps", format!("Type {p} supports 4, 8, 12 or 16 APs, got {n}")));
            }
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(Error::config("dt_ms", format!("must be positive, got {} s", self.dt_s)));
        }
        if !(self.duration_s >= self.dt_s && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s", "must be at least one time step"));
        }
        if !(self.t_align_s > 0.0 && self.t_align_s.is_finite()) {
            return Err(Error::config("t_align_ms", "must be positive"));
        }
        if let Some(h) = self.h_override {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("h_eff_m", format!("effective height must be positive, got {h}")));
            }
        }
        if let Some(p) = self.realign_interval_s {
            if !(p >= self.dt_s) {
                return Err(Error::config("realign_interval_s", "must be at least one time step"));
            }
        }
        let room = self.effective_room();
        if !(self.mobility.device_height < room.height) {
            return Err(Error::config("user_height_m", "device must sit below the ceiling"));
        }
        if let Some(c) = &self.custom_constellation {
            if self.placement != PlacementType::Custom || c.len() != self.n_aps {
                return Err(Error::config("constellation", "custom layout needs placement `custom` and matching n_aps"));
            }
            c.validate(&room)?;
        }
        Ok(())
    }

    /// Room with the ceiling moved to honour `h_override`.
    pub fn effective_room(&self) -> Room {
        match self.h_override {
            Some(h) => self.room.with_effective_height(h, self.mobility.device_height),
            None => self.room,
        }
    }

    pub fn effective_height(&self) -> f64 {
        self.effective_room().height - self.mobility.device_height
    }

    pub fn per_ap_power(&self) -> f64 {
        self.p_o_w / self.n_aps as f64
    }

    /// Link parameters of one AP under the power split.
    pub fn ap_link(&self) -> LinkBudgetParams {
        self.link.with_power(self.per_ap_power())
    }

    pub fn link_model(&self) -> Result<LinkModel> {
        LinkModel::new(&self.ap_link())
    }

    pub fn n_steps(&self) -> u64 {
        (self.duration_s / self.dt_s).round().max(1.0) as u64
    }

    pub fn constellation(&self) -> Result<Constellation> {
        let room = self.effective_room();
        let t = self.t_align_s;
        let h_u = self.mobility.device_height;
        match self.placement {
            PlacementType::A => place_type_a(&room, t),
            PlacementType::B => place_type_b(&room, self.n_aps, t),
            PlacementType::C => {
                let tau = absorption_coefficient(&self.link)?;
                let h_c = matched_height_correction(&room, self.n_aps, h_u, tau)?;
                place_type_c(&room, self.n_aps, h_c, t)
            }
            PlacementType::D => place_type_d(&room, self.n_aps, h_u, t),
            PlacementType::E => place_type_e(&room, self.n_aps, h_u, t),
            PlacementType::F => place_type_f(&room, self.n_aps, t),
            PlacementType::Custom => self
                .custom_constellation
                .clone()
                .ok_or_else(|| Error::config("constellation", "placement `custom` needs a layout file")),
        }
    }
}
