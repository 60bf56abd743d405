//! Frequency-indexed molecular absorption lookup.
//!
//! The table stores the absorption coefficient at a reference relative
//! humidity for each frequency; lookups interpolate linearly in frequency and
//! scale linearly with humidity. Temperature is not modelled: the bundled
//! table is tabulated at 25 °C and a caller-supplied temperature is ignored.

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Water-vapour absorption at 25 °C, 1013.25 hPa, 60 % RH, 100 GHz to 1 THz in
/// 1 GHz steps (ITU-R P.676-12 Annex 1 line-by-line model).
const DEFAULT_TABLE: &str = include_str!("../../data/absorption_h2o_25c.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRow {
    pub frequency_hz: f64,
    pub tau_per_m: f64,
    pub reference_humidity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable {
    rows: Vec<AbsorptionRow>,
}

impl AbsorptionTable {
    pub fn new(mut rows: Vec<AbsorptionRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::config("absorption_table", "needs at least two rows"));
        }
        for row in &rows {
            if !(row.frequency_hz > 0.0) || !(row.tau_per_m >= 0.0) || !(row.reference_humidity > 0.0) {
                return Err(Error::config(
                    "absorption_table",
                    format!("invalid row {row:?}"),
                ));
            }
        }
        rows.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
        if rows.windows(2).any(|w| w[0].frequency_hz == w[1].frequency_hz) {
            return Err(Error::config("absorption_table", "duplicate frequency"));
        }
        Ok(Self { rows })
    }

    /// Parses `frequency_hz,tau_per_m,reference_humidity` text. Lines starting
    /// with `#` and a non-numeric header line are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("frequency_hz") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::config("absorption_table", format!("line {}: `{line}`", lineno + 1));
            if cols.len() != 3 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            rows.push(AbsorptionRow {
                frequency_hz: num(cols[0])?,
                tau_per_m: num(cols[1])?,
                reference_humidity: num(cols[2])?,
            });
        }
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn bundled() -> &'static AbsorptionTable {
        static TABLE: OnceLock<AbsorptionTable> = OnceLock::new();
        TABLE.get_or_init(|| AbsorptionTable::parse(DEFAULT_TABLE).expect("bundled absorption table"))
    }

    pub fn rows(&self) -> &[AbsorptionRow] {
        &self.rows
    }

    pub fn frequency_range(&self) -> (f64, f64) {
        (self.rows[0].frequency_hz, self.rows[self.rows.len() - 1].frequency_hz)
    }

    /// Absorption coefficient (1/m) at `frequency_hz` and relative humidity
    /// `humidity` (fraction).
    pub fn tau(&self, frequency_hz: f64, humidity: f64) -> Result<f64> {
        let (lo, hi) = self.frequency_range();
        if !(frequency_hz >= lo && frequency_hz <= hi) {
            return Err(Error::domain(
                "absorption_coefficient",
                format!("frequency {frequency_hz} Hz outside table range [{lo}, {hi}] Hz"),
            ));
        }
        let per_unit = |r: &AbsorptionRow| r.tau_per_m / r.reference_humidity;
        let idx = self.rows.partition_point(|r| r.frequency_hz < frequency_hz);
        let unit = if idx == 0 {
            per_unit(&self.rows[0])
        } else {
            let (a, b) = (&self.rows[idx - 1], &self.rows[idx]);
            let t = (frequency_hz - a.frequency_hz) / (b.frequency_hz - a.frequency_hz);
            per_unit(a) + t * (per_unit(b) - per_unit(a))
        };
        Ok(unit * humidity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_covers_sub_thz_band() {
        let table = AbsorptionTable::bundled();
        assert_eq!(table.frequency_range(), (100e9, 1000e9));
        assert_eq!(table.rows().len(), 901);
    }

    #[test]
    fn reference_point_at_570_ghz() {
        let tau = AbsorptionTable::bundled().tau(570e9, 0.6).unwrap();
        assert_eq!(tau, 4.497165751e-01);
    }

    #[test]
    fn interpolates_and_scales() {
        let table = AbsorptionTable::parse("frequency_hz,tau_per_m,reference_humidity\n1,1.0,0.5\n3,3.0,0.5\n").unwrap();
        assert!((table.tau(2.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((table.tau(2.0, 0.25).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(table.tau(2.0, 0.0).unwrap(), 0.0);
        assert!(table.tau(4.0, 0.5).is_err());
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(AbsorptionTable::parse("1,2\n3,4\n").is_err());
        assert!(AbsorptionTable::parse("1,1,0.5\n").is_err());
        assert!(AbsorptionTable::parse("1,-1,0.5\n2,1,0.5\n").is_err());
    }
}
