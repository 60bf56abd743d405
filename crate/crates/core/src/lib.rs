//! Indoor terahertz access-point placement.
//!
//! - [`linkbudget`]: antenna gain, path loss with molecular absorption,
//!   Shannon rate, Lambert-W illumination radius.
//! - [`geometry`]: rooms, placement Types A to F, perimeter height correction,
//!   body-cylinder line-of-sight test.
//! - [`mobility`]: seeded random-waypoint users.
//! - [`simulation`]: fixed-step engine, metrics, sweeps and heat maps.
//! - [`reporting`]: stable on-disk formats and crossover detection.
//! - [`config`]: the key/value configuration file schema.

pub mod config;
pub mod error;
pub mod geometry;
pub mod linkbudget;
pub mod mobility;
pub mod reporting;
pub mod simulation;

pub use error::{Error, Result};
