//! Command-line adapter over the `thzplace` library.
//!
//! Every subcommand resolves a [`ConfigFile`] (file contents plus flag
//! overrides), hands the converted [`SimConfig`] to one library call and
//! writes the result next to a [`RunManifest`]. No numeric work happens here.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use thzplace::config::ConfigFile;
use thzplace::linkbudget::{coverage_radius, coverage_radius_ceiled};
use thzplace::mobility::init_users;
use thzplace::reporting::{
    detect_crossover, write_atomic, write_events, write_heatmap, write_json, write_results, write_trajectory,
    CrossoverResult, ResultsRow,
};
use thzplace::simulation::{heatmap, sweep, Scenario, SimConfig, Simulation, SweepAxis};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<thzplace::Error> for CliError {
    fn from(e: thzplace::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn config_err(field: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {detail}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(alias = "H")]
    H,
    #[value(alias = "N")]
    N,
    #[value(alias = "placement_type")]
    Type,
}

#[derive(Debug, Parser)]
#[command(name = "thzplace", version, about = "Indoor terahertz access-point placement simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file; defaults apply to every missing key.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `[sim] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Parallel runs for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides `[sim] blockage`.
    #[arg(long, global = true, value_enum)]
    pub blockage: Option<Switch>,
    /// Placement and AP count, e.g. `A`, `B4`, `C16`; overrides `[placement]`.
    #[arg(long = "type", global = true, value_name = "SCENARIO")]
    pub scenario: Option<String>,
    /// Overrides `[placement] h_eff_m`.
    #[arg(long, global = true, value_name = "M")]
    pub h_eff: Option<f64>,
    /// Overrides `[sim] duration_s`.
    #[arg(long, global = true, value_name = "S")]
    pub duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration and print the resolved values.
    Validate,
    /// Illumination radius of one AP transmitting the total power.
    Radius {
        /// Spectral efficiency, bit/s/Hz.
        #[arg(long = "s")]
        s: f64,
        /// Round up to whole metres.
        #[arg(long)]
        ceil: bool,
        /// Use the per-AP share of the power budget instead of the total.
        #[arg(long)]
        split: bool,
    },
    /// Radius table over carrier frequencies and beamwidths.
    CoverageSweep {
        /// Carrier frequencies, GHz.
        #[arg(long, value_delimiter = ',', required = true)]
        frequencies: Vec<f64>,
        /// Beamwidths, degrees, applied at both ends.
        #[arg(long, value_delimiter = ',', required = true)]
        beamwidths: Vec<f64>,
        /// Spectral efficiency, bit/s/Hz.
        #[arg(long = "s", default_value_t = 0.1)]
        s: f64,
    },
    /// Rate raster with Darkness / Illumination / Shadow labels.
    Heatmap {
        /// Cells per metre.
        #[arg(long, default_value_t = 10.0)]
        resolution: f64,
        /// Probe rate, Gbps; defaults to `rate_min_gbps`.
        #[arg(long)]
        probe_gbps: Option<f64>,
    },
    /// One simulation run.
    Simulate {
        /// Also write `events.csv`.
        #[arg(long)]
        events: bool,
        /// Also write `trajectory.csv`.
        #[arg(long)]
        trajectory: bool,
    },
    /// Independent runs over one axis, one row per (value, series, seed).
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma list or inclusive range `start:stop:step`; scenario tokens
        /// for `--axis type`.
        #[arg(long)]
        values: String,
        /// Series to run at each axis value, e.g. `B4,C4`.
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        /// Seeds per point; defaults to the configured seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
}

/// Provenance embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: BTreeMap<String, String>,
    pub seed: u64,
    /// SHA-256 of `config` rendered as canonical TOML.
    pub config_sha256: String,
    pub config: ConfigFile,
}

impl RunManifest {
    pub fn new(command: &str, arguments: BTreeMap<String, String>, config: &ConfigFile) -> Self {
        Self {
            tool: "thzplace".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            arguments,
            seed: config.sim.seed,
            config_sha256: config_hash(config),
            config: config.clone(),
        }
    }

    fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

pub fn config_hash(config: &ConfigFile) -> String {
    hex::encode(Sha256::digest(config.to_toml_string().as_bytes()))
}

/// Reads the config file (if any), applies flag overrides and makes file
/// references absolute so the resolved config stands alone.
pub fn resolve_config(common: &Common) -> Result<ConfigFile, CliError> {
    let (mut file, base) = match &common.config {
        Some(path) => {
            let file = ConfigFile::load(path).map_err(|e| CliError::Config(e.to_string()))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (file, base)
        }
        None => (ConfigFile::default(), PathBuf::new()),
    };
    let absolute = |p: &PathBuf| -> Result<PathBuf, CliError> {
        let joined = base.join(p);
        joined.canonicalize().map_err(|e| CliError::Config(format!("{}: {e}", joined.display())))
    };
    if let Some(p) = &file.link.absorption_table {
        file.link.absorption_table = Some(absolute(p)?);
    }
    if let Some(p) = &file.placement.constellation_file {
        file.placement.constellation_file = Some(absolute(p)?);
    }
    if let Some(seed) = common.seed {
        file.sim.seed = seed;
    }
    if let Some(b) = common.blockage {
        file.sim.blockage = b == Switch::On;
    }
    if let Some(token) = &common.scenario {
        let s: Scenario = token.parse()?;
        file.placement.placement_type = s.placement.to_string();
        file.placement.n_aps = s.n_aps;
    }
    if let Some(h) = common.h_eff {
        file.placement.h_eff_m = Some(h);
    }
    if let Some(d) = common.duration {
        file.sim.duration_s = d;
    }
    Ok(file)
}

fn out_dir(common: &Common) -> Result<&Path, CliError> {
    common.out.as_deref().ok_or_else(|| config_err("out", "this command writes files; pass --out DIR"))
}

/// Parses `a,b,c` or the inclusive range `start:stop:step`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |detail: &str| config_err("values", format!("{detail} in `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0 && stop >= start && step.is_finite() && stop.is_finite()) {
            return Err(bad("range needs start <= stop and step > 0"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    if parts.len() != 1 {
        return Err(bad("expected a list or start:stop:step"));
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad number")))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(bad("no values"));
    }
    Ok(values)
}

fn parse_scenarios(tokens: &[String]) -> Result<Vec<Scenario>, CliError> {
    tokens.iter().map(|t| t.parse::<Scenario>().map_err(CliError::from)).collect()
}

fn sim_config(file: &ConfigFile) -> Result<SimConfig, CliError> {
    Ok(file.to_sim_config(Path::new("."))?)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = resolve_config(&cli.common)?;
    let cfg = sim_config(&file)?;
    let mut print = |line: String| writeln!(stdout, "{line}").map_err(runtime);
    match &cli.command {
        Command::Validate => {
            print(format!("ok: {} config_sha256={}", cfg.scenario(), config_hash(&file)))?;
            print(format!(
                "effective_height_m={} per_ap_power_w={} users={} steps={}",
                cfg.effective_height(),
                cfg.per_ap_power(),
                cfg.n_users,
                cfg.n_steps()
            ))?;
            let c = cfg.constellation()?;
            if c.h_c > 0.0 {
                print(format!("h_c_m={}", c.h_c))?;
            }
            Ok(())
        }
        Command::Radius { s, ceil, split } => {
            let link = if *split { cfg.ap_link() } else { cfg.link.with_power(cfg.p_o_w) };
            if *ceil {
                print(format!("{}", coverage_radius_ceiled(&link, *s)?))
            } else {
                print(format!("{:.6}", coverage_radius(&link, *s)?))
            }
        }
        Command::CoverageSweep { frequencies, beamwidths, s } => {
            let mut table = String::from("f_c_ghz,beamwidth_deg,s_bps_per_hz,radius_m\n");
            for &f in frequencies {
                for &b in beamwidths {
                    let mut link = cfg.link.with_power(cfg.p_o_w);
                    link.f_c_hz = f * 1e9;
                    link.delta_t_deg = b;
                    link.delta_r_deg = b;
                    let r = coverage_radius(&link, *s).map_err(|e| config_err("frequencies/beamwidths", e))?;
                    table.push_str(&format!("{f},{b},{s},{r}\n"));
                }
            }
            stdout.write_all(table.as_bytes()).map_err(runtime)?;
            if let Some(dir) = &cli.common.out {
                let args = BTreeMap::from([
                    ("frequencies".to_string(), join(frequencies)),
                    ("beamwidths".to_string(), join(beamwidths)),
                    ("s".to_string(), s.to_string()),
                ]);
                write_atomic(&dir.join("coverage_sweep.csv"), table.as_bytes())?;
                write_json(&RunManifest::new("coverage-sweep", args, &file), &dir.join("manifest.json"))?;
            }
            Ok(())
        }
        Command::Heatmap { resolution, probe_gbps } => {
            let dir = out_dir(&cli.common)?;
            let probe = probe_gbps.map_or(cfg.mobility.rate_min_bps, |g| g * 1e9);
            let bodies = if cfg.blockage_enabled {
                Some(init_users(&cfg.effective_room(), cfg.n_users, cfg.seed, &cfg.mobility).bodies())
            } else {
                None
            };
            let grid = heatmap(&cfg, *resolution, probe, bodies.as_deref())?;
            let args = BTreeMap::from([
                ("resolution".to_string(), resolution.to_string()),
                ("probe_bps".to_string(), probe.to_string()),
            ]);
            let manifest = RunManifest::new("heatmap", args, &file);
            write_heatmap(&grid, dir, "heatmap", Some(manifest.to_value()))?;
            write_json(&manifest, &dir.join("manifest.json"))?;
            use thzplace::simulation::Region;
            print(format!(
                "{}x{} cells: illumination={} shadow={} darkness={}",
                grid.nx,
                grid.ny,
                grid.count(Region::Illumination),
                grid.count(Region::Shadow),
                grid.count(Region::Darkness)
            ))
        }
        Command::Simulate { events, trajectory } => {
            let dir = out_dir(&cli.common)?;
            let mut sim = Simulation::new(cfg.clone())?.record_events(*events).record_trajectory(*trajectory);
            for _ in 0..cfg.n_steps() {
                sim.step();
            }
            let report = sim.report();
            let manifest = RunManifest::new("simulate", BTreeMap::new(), &file);
            write_results(std::slice::from_ref(&report), &dir.join("results.csv"))?;
            write_json(&serde_json::json!({ "manifest": manifest, "report": report }), &dir.join("summary.json"))?;
            write_json(&manifest, &dir.join("manifest.json"))?;
            if *events {
                write_events(sim.events(), &dir.join("events.csv"))?;
            }
            if *trajectory {
                write_trajectory(sim.trajectory(), &dir.join("trajectory.csv"))?;
            }
            print(format!(
                "{} H={} seed={}: user_coverage={} mean_throughput_bps={} ap_idle_fraction={} handoffs={}",
                cfg.scenario(),
                report.effective_height_m,
                report.seed,
                report.user_coverage,
                report.mean_throughput_bps,
                report.ap_idle_fraction,
                report.handoff_count
            ))
        }
        Command::Sweep { axis, values, types, seeds } => {
            let dir = out_dir(&cli.common)?;
            let series = parse_scenarios(types)?;
            let sweep_axis = match axis {
                Axis::H => SweepAxis::EffectiveHeight(parse_values(values)?),
                Axis::N => SweepAxis::ApCount(
                    parse_values(values)?
                        .into_iter()
                        .map(|v| {
                            if v >= 1.0 && v.fract() == 0.0 {
                                Ok(v as usize)
                            } else {
                                Err(config_err("values", format!("AP count must be a positive integer, got {v}")))
                            }
                        })
                        .collect::<Result<_, _>>()?,
                ),
                Axis::Type => {
                    let tokens: Vec<String> = values.split(',').map(str::to_string).collect();
                    SweepAxis::Placement(parse_scenarios(&tokens)?)
                }
            };
            let reports = sweep(&cfg, &sweep_axis, &series, seeds, cli.common.jobs)?;
            let args = BTreeMap::from([
                ("axis".to_string(), sweep_axis.name().to_string()),
                ("values".to_string(), values.clone()),
                ("types".to_string(), types.join(",")),
                ("seeds".to_string(), seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
            ]);
            let manifest = RunManifest::new("sweep", args, &file);
            write_results(&reports, &dir.join("results.csv"))?;
            write_json(&manifest, &dir.join("manifest.json"))?;
            if *axis == Axis::H {
                let rows: Vec<ResultsRow> = reports.iter().map(ResultsRow::from).collect();
                let crossovers = throughput_crossovers(&rows)?;
                for c in &crossovers {
                    let at = c.crossover_h.map_or("none".to_string(), |h| format!("H = {h:.3} m"));
                    print(format!("{} crossover {} vs {}: {at}", c.metric, c.pair.0, c.pair.1))?;
                }
                write_json(&crossovers, &dir.join("crossover.json"))?;
            }
            print(format!("{} rows written to {}", reports.len(), dir.join("results.csv").display()))
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Seed-averaged throughput crossovers for every `B<N>`/`C<N>` pair present.
pub fn throughput_crossovers(rows: &[ResultsRow]) -> Result<Vec<CrossoverResult>, CliError> {
    let mut series: BTreeMap<(String, usize), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        series
            .entry((r.placement_type.clone(), r.n_aps))
            .or_default()
            .entry(r.h_m.to_bits())
            .or_default()
            .push(r.mean_throughput_bps);
    }
    let points = |key: &(String, usize)| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = series[key]
            .iter()
            .map(|(h, v)| (f64::from_bits(*h), v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    };
    let mut out = Vec::new();
    for (ptype, n) in series.keys() {
        let partner = ("C".to_string(), *n);
        if ptype != "B" || !series.contains_key(&partner) {
            continue;
        }
        let b = points(&(ptype.clone(), *n));
        let c = points(&partner);
        if b.len() < 2 {
            continue;
        }
        out.push(detect_crossover("mean_throughput_bps", (&format!("B{n}"), &format!("C{n}")), &b, &c)?);
    }
    Ok(out)
}
