//! On-disk formats and crossover detection.
//!
//! All writers format floats with Rust's shortest round-trip `Display`, emit
//! a fixed column order and terminate every line with `\n`, so equal inputs
//! give equal bytes. Files are written to a temporary sibling and renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::{Event, EventKind, HeatmapGrid, MetricsReport, Region, TrajectoryPoint};

pub const RESULTS_HEADER: &str =
    "placement_type,N,H_m,seed,user_coverage,mean_throughput_bps,ap_idle_fraction,handoff_count";

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// One line of the long-format results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub placement_type: String,
    pub n_aps: usize,
    pub h_m: f64,
    pub seed: u64,
    pub user_coverage: f64,
    pub mean_throughput_bps: f64,
    pub ap_idle_fraction: f64,
    pub handoff_count: u64,
}

impl From<&MetricsReport> for ResultsRow {
    fn from(r: &MetricsReport) -> Self {
        Self {
            placement_type: r.placement_type.clone(),
            n_aps: r.n_aps,
            h_m: r.effective_height_m,
            seed: r.seed,
            user_coverage: r.user_coverage,
            mean_throughput_bps: r.mean_throughput_bps,
            ap_idle_fraction: r.ap_idle_fraction,
            handoff_count: r.handoff_count,
        }
    }
}

pub fn results_table(rows: &[ResultsRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.placement_type,
            r.n_aps,
            fmt_f64(r.h_m),
            r.seed,
            fmt_f64(r.user_coverage),
            fmt_f64(r.mean_throughput_bps),
            fmt_f64(r.ap_idle_fraction),
            r.handoff_count
        ));
    }
    out
}

pub fn write_results(reports: &[MetricsReport], path: &Path) -> Result<()> {
    let rows: Vec<ResultsRow> = reports.iter().map(ResultsRow::from).collect();
    write_atomic(path, results_table(&rows).as_bytes())
}

pub fn parse_results(text: &str, path: &Path) -> Result<Vec<ResultsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return Err(Error::parse(path, "missing or unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::parse(path, format!("row {}: `{line}`", i + 1));
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 8 {
                return Err(bad());
            }
            let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(ResultsRow {
                placement_type: c[0].to_string(),
                n_aps: c[1].parse().map_err(|_| bad())?,
                h_m: f(c[2])?,
                seed: c[3].parse().map_err(|_| bad())?,
                user_coverage: f(c[4])?,
                mean_throughput_bps: f(c[5])?,
                ap_idle_fraction: f(c[6])?,
                handoff_count: c[7].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultsRow>> {
    parse_results(&read(path)?, path)
}

/// Sidecar record describing a heat map grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMeta {
    pub resolution_cells_per_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub extent_m: [f64; 2],
    pub device_height_m: f64,
    pub probe_rate_bps: f64,
    pub rate_file: String,
    pub label_file: String,
    pub legend: std::collections::BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

/// Writes `<stem>_rate.csv` (bit/s), `<stem>_labels.csv` (`D`/`I`/`S`) and
/// `<stem>_meta.json` into `dir`. Row `j` of each grid is `y` index `j`.
pub fn write_heatmap(grid: &HeatmapGrid, dir: &Path, stem: &str, manifest: Option<serde_json::Value>) -> Result<()> {
    let mut rates = String::new();
    let mut labels = String::new();
    for j in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx).map(|i| fmt_f64(grid.value(i, j))).collect();
        rates.push_str(&row.join(","));
        rates.push('\n');
        let row: Vec<String> = (0..grid.nx).map(|i| grid.label(i, j).code().to_string()).collect();
        labels.push_str(&row.join(","));
        labels.push('\n');
    }
    let legend = [Region::Darkness, Region::Illumination, Region::Shadow]
        .into_iter()
        .map(|r| (r.code().to_string(), format!("{r:?}")))
        .collect();
    let meta = HeatmapMeta {
        resolution_cells_per_m: grid.resolution,
        nx: grid.nx,
        ny: grid.ny,
        extent_m: grid.extent,
        device_height_m: grid.device_height,
        probe_rate_bps: grid.probe_rate_bps,
        rate_file: format!("{stem}_rate.csv"),
        label_file: format!("{stem}_labels.csv"),
        legend,
        manifest,
    };
    write_atomic(&dir.join(&meta.rate_file), rates.as_bytes())?;
    write_atomic(&dir.join(&meta.label_file), labels.as_bytes())?;
    write_json(&meta, &dir.join(format!("{stem}_meta.json")))
}

pub fn read_heatmap(dir: &Path, stem: &str) -> Result<HeatmapGrid> {
    let meta_path = dir.join(format!("{stem}_meta.json"));
    let meta: HeatmapMeta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| Error::parse(&meta_path, e.to_string()))?;
    let rate_path = dir.join(&meta.rate_file);
    let label_path = dir.join(&meta.label_file);
    let parse_grid = |path: &Path, text: &str| -> Result<Vec<Vec<String>>> {
        let rows: Vec<Vec<String>> =
            text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect();
        if rows.len() != meta.ny || rows.iter().any(|r| r.len() != meta.nx) {
            return Err(Error::parse(path, format!("expected {} x {} grid", meta.ny, meta.nx)));
        }
        Ok(rows)
    };
    let mut values = Vec::with_capacity(meta.nx * meta.ny);
    for row in parse_grid(&rate_path, &read(&rate_path)?)? {
        for v in row {
            values.push(v.parse().map_err(|_| Error::parse(&rate_path, format!("bad value `{v}`")))?);
        }
    }
    let mut labels = Vec::with_capacity(meta.nx * meta.ny);
    for row in parse_grid(&label_path, &read(&label_path)?)? {
        for v in row {
            let mut chars = v.chars();
            let region = match (chars.next(), chars.next()) {
                (Some(c), None) => Region::from_code(c),
                _ => None,
            };
            labels.push(region.ok_or_else(|| Error::parse(&label_path, format!("bad label `{v}`")))?);
        }
    }
    Ok(HeatmapGrid {
        resolution: meta.resolution_cells_per_m,
        nx: meta.nx,
        ny: meta.ny,
        extent: meta.extent_m,
        device_height: meta.device_height_m,
        probe_rate_bps: meta.probe_rate_bps,
        values,
        labels,
    })
}

pub const EVENTS_HEADER: &str = "t,event_kind,user_id,ap_id";

pub fn write_events(events: &[Event], path: &Path) -> Result<()> {
    let mut out = String::from(EVENTS_HEADER);
    out.push('\n');
    for e in events {
        let ap = e.ap.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", fmt_f64(e.t), e.kind.as_str(), e.user, ap));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let text = read(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(EVENTS_HEADER) {
        return Err(Error::parse(path, "missing or unexpected header"));
    }
    lines
        .map(|line| {
            let bad = || Error::parse(path, format!("bad event `{line}`"));
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 4 {
                return Err(bad());
            }
            let kind = match c[1] {
                "handoff" => EventKind::Handoff,
                "blockage_start" => EventKind::BlockageStart,
                "blockage_end" => EventKind::BlockageEnd,
                "alignment_done" => EventKind::AlignmentDone,
                _ => return Err(bad()),
            };
            Ok(Event {
                t: c[0].parse().map_err(|_| bad())?,
                kind,
                user: c[2].parse().map_err(|_| bad())?,
                ap: if c[3].is_empty() { None } else { Some(c[3].parse().map_err(|_| bad())?) },
            })
        })
        .collect()
}

pub fn write_trajectory(points: &[TrajectoryPoint], path: &Path) -> Result<()> {
    let mut out = String::from("t,user_id,x,y\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", fmt_f64(p.t), p.user, fmt_f64(p.x), fmt_f64(p.y)));
    }
    write_atomic(path, out.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Where two metric series, sampled on the same grid, swap order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverResult {
    pub metric: String,
    pub pair: (String, String),
    /// Linearly interpolated abscissa of the first sign change.
    pub crossover_h: Option<f64>,
    /// Grid points bracketing the crossover.
    pub bracket: Option<(f64, f64)>,
    /// `first - second` at the two bracketing points.
    pub gaps: Option<(f64, f64)>,
}

/// Finds the first interval where `sign(first - second)` changes. Exact ties
/// at a grid point count as the crossover when the order on the next
/// non-tied point is the opposite of the order before it.
pub fn detect_crossover(
    metric: &str,
    names: (&str, &str),
    first: &[(f64, f64)],
    second: &[(f64, f64)],
) -> Result<CrossoverResult> {
    if first.len() != second.len() || first.len() < 2 {
        return Err(Error::config("series", "series need equal length and at least two points"));
    }
    if first.iter().zip(second).any(|(a, b)| a.0 != b.0) {
        return Err(Error::config("series", "series are sampled on different grids"));
    }
    let gap: Vec<f64> = first.iter().zip(second).map(|(a, b)| a.1 - b.1).collect();
    let h: Vec<f64> = first.iter().map(|p| p.0).collect();
    let mut result = CrossoverResult {
        metric: metric.to_string(),
        pair: (names.0.to_string(), names.1.to_string()),
        crossover_h: None,
        bracket: None,
        gaps: None,
    };
    for i in 0..gap.len() - 1 {
        let (g0, g1) = (gap[i], gap[i + 1]);
        if g0 * g1 < 0.0 {
            let t = g0 / (g0 - g1);
            result.crossover_h = Some(h[i] + t * (h[i + 1] - h[i]));
            result.bracket = Some((h[i], h[i + 1]));
            result.gaps = Some((g0, g1));
            return Ok(result);
        }
        if g0 != 0.0 && g1 == 0.0 {
            if let Some(j) = (i + 2..gap.len()).find(|&j| gap[j] != 0.0) {
                if gap[j] * g0 < 0.0 {
                    result.crossover_h = Some(h[i + 1]);
                    result.bracket = Some((h[i], h[j]));
                    result.gaps = Some((g0, gap[j]));
                    return Ok(result);
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{heatmap, SimConfig};
    use crate::geometry::{BodyCylinder, PlacementType};

    #[test]
    fn crossover_examples() {
        let b = [(4.0, 10.0), (5.0, 8.0)];
        let c = [(4.0, 9.0), (5.0, 9.0)];
        let r = detect_crossover("throughput", ("B4", "C4"), &b, &c).unwrap();
        assert_eq!(r.crossover_h, Some(4.5));
        assert_eq!(r.bracket, Some((4.0, 5.0)));
        let swapped = detect_crossover("throughput", ("C4", "B4"), &c, &b).unwrap();
        assert_eq!(swapped.crossover_h, Some(4.5));
        assert_eq!(swapped.gaps, Some((-1.0, 1.0)));

        let none = detect_crossover("x", ("a", "b"), &[(1.0, 3.0), (2.0, 3.0)], &[(1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(none.crossover_h, None);
        let tie = detect_crossover(
            "x",
            ("a", "b"),
            &[(1.0, 2.0), (2.0, 1.0), (3.0, 0.0)],
            &[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)],
        )
        .unwrap();
        assert_eq!(tie.crossover_h, Some(2.0));
        assert!(detect_crossover("x", ("a", "b"), &[(1.0, 1.0)], &[(1.0, 1.0)]).is_err());
        assert!(detect_crossover("x", ("a", "b"), &[(1.0, 1.0), (2.0, 1.0)], &[(1.0, 1.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn results_round_trip_and_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig { duration_s: 0.2, ..SimConfig::table1(PlacementType::B, 4) };
        let report = crate::simulation::run(&cfg).unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_results(std::slice::from_ref(&report), &a).unwrap();
        write_results(std::slice::from_ref(&report), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(read_results(&a).unwrap(), vec![ResultsRow::from(&report)]);

        let empty = dir.path().join("empty.csv");
        write_results(&[], &empty).unwrap();
        assert_eq!(fs::read_to_string(&empty).unwrap(), format!("{RESULTS_HEADER}\n"));
        assert!(read_results(&empty).unwrap().is_empty());
    }

    #[test]
    fn heatmap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig::table1(PlacementType::C, 8);
        let body = BodyCylinder { center: [3.0, 3.0], radius: 0.3, height: 2.9 };
        let grid = heatmap(&cfg, 3.0, 5e9, Some(&[body])).unwrap();
        write_heatmap(&grid, dir.path(), "hm", None).unwrap();
        assert_eq!(read_heatmap(dir.path(), "hm").unwrap(), grid);
    }

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let events = vec![
            Event { t: 0.01, kind: EventKind::Handoff, user: 3, ap: Some(2) },
            Event { t: 0.02, kind: EventKind::BlockageStart, user: 1, ap: None },
        ];
        let p = dir.path().join("events.csv");
        write_events(&events, &p).unwrap();
        assert_eq!(read_events(&p).unwrap(), events);
    }

    #[test]
    fn io_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope").join("x.csv");
        let err = read_results(&missing).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
