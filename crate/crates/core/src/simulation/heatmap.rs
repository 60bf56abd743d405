//! Static rate rasterization with Darkness / Illumination / Shadow labels.

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::error::{Error, Result};
use crate::geometry::{los_blocked, BodyCylinder, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// No AP delivers the probe rate.
    Darkness,
    /// At least one AP with clear line of sight delivers the probe rate.
    Illumination,
    /// The probe rate is reachable but every qualifying AP is blocked.
    Shadow,
}

impl Region {
    pub fn code(self) -> char {
        match self {
            Region::Darkness => 'D',
            Region::Illumination => 'I',
            Region::Shadow => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'D' => Some(Region::Darkness),
            'I' => Some(Region::Illumination),
            'S' => Some(Region::Shadow),
            _ => None,
        }
    }
}

/// Rate field at device height. Row `j` holds cells with centre
/// `y = (j + 0.5) / resolution`; column `i` has `x = (i + 0.5) / resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    /// Cells per metre.
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub extent: [f64; 2],
    pub device_height: f64,
    pub probe_rate_bps: f64,
    /// Row-major, `values[j * nx + i]`, bit/s.
    pub values: Vec<f64>,
    pub labels: Vec<Region>,
}

impl HeatmapGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            ((i as f64 + 0.5) / self.resolution).min(self.extent[0]),
            ((j as f64 + 0.5) / self.resolution).min(self.extent[1]),
        )
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn label(&self, i: usize, j: usize) -> Region {
        self.labels[j * self.nx + i]
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region).count()
    }
}

/// Best single-user rate over every AP that sees each cell, with the power
/// split and effective height of `config`.
pub fn heatmap(
    config: &SimConfig,
    resolution: f64,
    probe_rate_bps: f64,
    blockers: Option<&[BodyCylinder]>,
) -> Result<HeatmapGrid> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::config("resolution", format!("must be positive, got {resolution}")));
    }
    if !(probe_rate_bps >= 0.0) {
        return Err(Error::config("probe_rate", "must be >= 0"));
    }
    config.validate()?;
    let room = config.effective_room();
    let model = config.link_model()?;
    let constellation = config.constellation()?;
    let h = config.mobility.device_height;
    let nx = (room.length * resolution - 1e-9).ceil().max(1.0) as usize;
    let ny = (room.width * resolution - 1e-9).ceil().max(1.0) as usize;
    let mut grid = HeatmapGrid {
        resolution,
        nx,
        ny,
        extent: [room.length, room.width],
        device_height: h,
        probe_rate_bps,
        values: Vec::with_capacity(nx * ny),
        labels: Vec::with_capacity(nx * ny),
    };
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = grid.cell_center(i, j);
            let device = Point3::new(x, y, h);
            let mut free_best: Option<f64> = None;
            let mut los_best: Option<f64> = None;
            for node in constellation.nodes.iter().filter(|n| n.sees(x, y)) {
                let rate = model.rate_unchecked(node.position.distance(&device).max(1e-9));
                free_best = Some(free_best.map_or(rate, |b: f64| b.max(rate)));
                let clear = blockers.is_none_or(|b| !los_blocked(&node.position, &device, b, None));
                if clear {
                    los_best = Some(los_best.map_or(rate, |b: f64| b.max(rate)));
                }
            }
            let label = match (los_best, free_best) {
                (Some(r), _) if r >= probe_rate_bps => Region::Illumination,
                (_, Some(r)) if r >= probe_rate_bps && blockers.is_some() => Region::Shadow,
                _ => Region::Darkness,
            };
            grid.values.push(los_best.unwrap_or(0.0));
            grid.labels.push(label);
        }
    }
    Ok(grid)
}
