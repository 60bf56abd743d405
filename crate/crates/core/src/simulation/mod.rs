//! Deterministic fixed-step simulation: association by strongest received
//! power, beam-alignment dead time, optional human blockage, and the three
//! evaluation metrics (user coverage, mean throughput, AP idle time).
//!
//! Step semantics:
//! - users move, then every user is re-associated;
//! - a new or changed association starts the serving AP's alignment
//!   countdown, during which the user receives nothing; a link that keeps its
//!   AP keeps its alignment;
//! - handoffs follow signal strength alone; with blockage enabled, a serving
//!   link whose line of sight is cut by another user's body stays assigned
//!   (keeping its time share) but delivers nothing, and realigns from
//!   scratch once the line of sight clears;
//! - an AP is idle in a step when no user is associated with it.

mod config;
mod engine;
mod heatmap;

pub use config::{Multiplexing, Scenario, SimConfig};
pub use engine::{
    associate, device_point, run, ApMetrics, Event, EventKind, Link, LinkAssignment, MetricsReport, Simulation,
    StepOutcome, TrajectoryPoint, UserMetrics,
};
pub use heatmap::{heatmap, HeatmapGrid, Region};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Axis of a parameter sweep with its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Effective height `H`, m.
    EffectiveHeight(Vec<f64>),
    /// AP count; the placement type comes from each series.
    ApCount(Vec<usize>),
    /// Placement scenarios; the series list is ignored.
    Placement(Vec<Scenario>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::EffectiveHeight(_) => "H",
            SweepAxis::ApCount(_) => "N",
            SweepAxis::Placement(_) => "placement_type",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::EffectiveHeight(v) => v.len(),
            SweepAxis::ApCount(v) => v.len(),
            SweepAxis::Placement(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, i: usize) -> String {
        match self {
            SweepAxis::EffectiveHeight(v) => v[i].to_string(),
            SweepAxis::ApCount(v) => v[i].to_string(),
            SweepAxis::Placement(v) => v[i].to_string(),
        }
    }

    fn apply(&self, i: usize, cfg: &mut SimConfig) {
        match self {
            SweepAxis::EffectiveHeight(v) => cfg.h_override = Some(v[i]),
            SweepAxis::ApCount(v) => cfg.n_aps = v[i],
            SweepAxis::Placement(v) => {
                cfg.placement = v[i].placement;
                cfg.n_aps = v[i].n_aps;
            }
        }
    }
}

/// Expands a sweep into the run configurations, ordered by axis value, then
/// series, then seed.
pub fn sweep_configs(base: &SimConfig, axis: &SweepAxis, series: &[Scenario], seeds: &[u64]) -> Vec<(String, SimConfig)> {
    let series: Vec<Scenario> = match axis {
        SweepAxis::Placement(_) => vec![base.scenario()],
        _ if series.is_empty() => vec![base.scenario()],
        _ => series.to_vec(),
    };
    let seeds: Vec<u64> = if seeds.is_empty() { vec![base.seed] } else { seeds.to_vec() };
    let mut out = Vec::new();
    for i in 0..axis.len() {
        for s in &series {
            for &seed in &seeds {
                let mut cfg = base.with_scenario(*s);
                cfg.seed = seed;
                axis.apply(i, &mut cfg);
                out.push((axis.label(i), cfg));
            }
        }
    }
    out
}

/// Runs every configuration of the sweep, `jobs` at a time (0 = all cores).
/// Rows come back in [`sweep_configs`] order regardless of completion order.
pub fn sweep(
    base: &SimConfig,
    axis: &SweepAxis,
    series: &[Scenario],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<MetricsReport>> {
    if axis.is_empty() {
        return Err(Error::config("values", "sweep needs at least one axis value"));
    }
    let configs = sweep_configs(base, axis, series, seeds);
    for (label, cfg) in &configs {
        cfg.validate().map_err(|e| Error::Sweep {
            axis: axis.name().to_string(),
            value: format!("{label} ({})", cfg.scenario()),
            source: Box::new(e),
        })?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|(label, cfg)| {
                run(cfg).map_err(|e| Error::Sweep {
                    axis: axis.name().to_string(),
                    value: label.clone(),
                    source: Box::new(e),
                })
            })
            .collect()
    })
}
