//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are the contract values; do not loosen them.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thzplace::geometry::{height_correction, los_blocked, BodyCylinder, PlacementType, Point3};
use thzplace::linkbudget::{
    achievable_rate, coverage_radius, coverage_radius_bruteforce, lambert_w0, LinkBudgetParams, BRANCH_POINT,
};
use thzplace::reporting::detect_crossover;
use thzplace::simulation::{heatmap, run, sweep, sweep_configs, MetricsReport, Region, Scenario, SimConfig, SweepAxis};

type Outcome = Result<String, String>;

fn check(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn random_link(rng: &mut ChaCha8Rng) -> (LinkBudgetParams, f64) {
    let p = LinkBudgetParams {
        f_c_hz: rng.gen_range(100e9..1e12),
        p_t_w: 10f64.powf(rng.gen_range(-6.0..-2.0)),
        tau_override: Some(rng.gen_range(0.0..5.0)),
        ..LinkBudgetParams::table1()
    };
    (p, rng.gen_range(0.01..10.0))
}

fn lambert_identity() -> Outcome {
    let start = Instant::now();
    let n = 10_000;
    let (lo, hi) = (1e-9f64.log10(), (1e6 - BRANCH_POINT).log10());
    let mut worst = 0.0f64;
    for k in 0..n {
        let x = BRANCH_POINT + 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64);
        let w = lambert_w0(x).map_err(|e| e.to_string())?;
        worst = worst.max((w * w.exp() - x).abs() / x.abs().max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 1.0,
        format!("worst scaled residual {worst:.2e} over {n} points in {secs:.3} s"),
        format!("worst scaled residual {worst:.2e} (limit 1e-12), {secs:.3} s (limit 1 s)"),
    )
}

fn radius_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, s) = random_link(&mut rng);
        let exact = coverage_radius(&p, s).map_err(|e| e.to_string())?;
        let oracle = coverage_radius_bruteforce(&p, s).map_err(|e| e.to_string())?;
        worst = worst.max((exact - oracle).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 5.0,
        format!("max |closed form - bisection| = {worst:.2e} m over 1000 sets in {secs:.3} s"),
        format!("max gap {worst:.2e} m (limit 1e-6), {secs:.3} s (limit 5 s)"),
    )
}

fn rate_radius_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, s) = random_link(&mut rng);
        let r = coverage_radius(&p, s).map_err(|e| e.to_string())?;
        let rate = achievable_rate(r, &p).map_err(|e| e.to_string())?;
        worst = worst.max((rate / (s * p.bandwidth_hz) - 1.0).abs());
    }
    check(
        worst <= 1e-9,
        format!("max relative rate error at r(S) = {worst:.2e} over 1000 cases"),
        format!("max relative rate error {worst:.2e} (limit 1e-9)"),
    )
}

fn height_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let h = rng.gen_range(0.5..10.0);
        let d_b = rng.gen_range(0.5..10.0);
        // Room-scale gaps; H - h_c = H exp(-x) loses digits as x grows.
        let d_c = d_b + rng.gen_range(0.0..3.0);
        let tau = rng.gen_range(0.0..5.0);
        let h_c = height_correction(h, d_b, d_c, tau).map_err(|e| e.to_string())?;
        let lhs = h / (h - h_c);
        let rhs = (tau * (d_c - d_b) / 2.0).exp();
        worst = worst.max((lhs / rhs - 1.0).abs());
    }
    check(
        worst <= 1e-12,
        format!("max relative error {worst:.2e} over 10000 cases"),
        format!("max relative error {worst:.2e} (limit 1e-12)"),
    )
}

fn series_key(r: &MetricsReport) -> String {
    if r.placement_type == "A" {
        "A".into()
    } else {
        format!("{}{}", r.placement_type, r.n_aps)
    }
}

fn fig6_shape() -> Outcome {
    let start = Instant::now();
    let heights: Vec<f64> = (0..11).map(|i| 2.0 + 0.5 * i as f64).collect();
    let base = SimConfig::table1(PlacementType::B, 4);
    let reports = sweep(&base, &SweepAxis::EffectiveHeight(heights.clone()), &Scenario::evaluation_set(), &[], 0)
        .map_err(|e| e.to_string())?;
    let mut series: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in &reports {
        series.entry(series_key(r)).or_default().push(r);
    }
    let mut problems = Vec::new();

    // (a) Type A weakly dominated on coverage by every Type B series.
    for (key, rows) in series.iter().filter(|(k, _)| k.starts_with('B')) {
        for (a, b) in series["A"].iter().zip(rows) {
            if a.user_coverage > b.user_coverage {
                problems.push(format!("(a) A beats {key} at H = {}", a.effective_height_m));
            }
        }
    }
    // (b) No metric improves by more than 2% between adjacent heights.
    for (key, rows) in &series {
        for w in rows.windows(2) {
            let (p, q) = (w[0], w[1]);
            let pairs = [
                ("coverage", p.user_coverage, q.user_coverage, true),
                ("throughput", p.mean_throughput_bps, q.mean_throughput_bps, true),
                ("idle", p.ap_idle_fraction, q.ap_idle_fraction, false),
            ];
            for (name, before, after, higher_is_better) in pairs {
                let improved = if higher_is_better { after > before * 1.02 } else { after < before * 0.98 };
                if improved {
                    problems.push(format!("(b) {key} {name} improves {before} -> {after} at H = {}", q.effective_height_m));
                }
            }
        }
    }
    // (c) B-vs-C throughput crossover inside [3.5, 5.5] m for some N.
    let mut found = Vec::new();
    let mut in_band = false;
    for n in [4, 8, 12, 16] {
        let pts = |k: String| -> Vec<(f64, f64)> {
            series[&k].iter().map(|r| (r.effective_height_m, r.mean_throughput_bps)).collect()
        };
        let c = detect_crossover("throughput", ("B", "C"), &pts(format!("B{n}")), &pts(format!("C{n}")))
            .map_err(|e| e.to_string())?;
        match c.crossover_h {
            Some(h) => {
                in_band |= (3.5..=5.5).contains(&h);
                found.push(format!("N={n}: {h:.2} m"));
            }
            None => found.push(format!("N={n}: none")),
        }
    }
    if !in_band {
        problems.push(format!("(c) no crossover in [3.5, 5.5] m ({})", found.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 600.0 {
        problems.push(format!("runtime {secs:.0} s exceeds 10 min"));
    }
    check(
        problems.is_empty(),
        format!("99 runs in {secs:.1} s; crossovers {}", found.join(", ")),
        problems.join("; "),
    )
}

fn fig7_blockage() -> Outcome {
    let mut problems = Vec::new();
    let mut largest_drop = (0.0f64, String::new());
    for s in Scenario::evaluation_set() {
        for seed in 1..=3 {
            let off = SimConfig { seed, ..SimConfig::table1(s.placement, s.n_aps) };
            let on = SimConfig { blockage_enabled: true, ..off.clone() };
            let a = run(&off).map_err(|e| e.to_string())?;
            let b = run(&on).map_err(|e| e.to_string())?;
            if b.user_coverage > a.user_coverage || b.mean_throughput_bps > a.mean_throughput_bps {
                problems.push(format!("{s} seed {seed}: blockage raised a metric"));
            }
            let drop = a.user_coverage - b.user_coverage;
            if drop > largest_drop.0 {
                largest_drop = (drop, format!("{s} seed {seed}"));
            }
        }
    }
    if largest_drop.0 <= 0.0 {
        problems.push("no scenario lost coverage under blockage".into());
    }
    check(
        problems.is_empty(),
        format!("27 paired runs monotone; largest coverage drop {:.4} ({})", largest_drop.0, largest_drop.1),
        problems.join("; "),
    )
}

fn cli_determinism() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().expect("tempdir")).collect();
    for (dir, seed) in dirs.iter().zip(["5", "5", "6"]) {
        let status = Command::new(env!("CARGO_BIN_EXE_thzplace"))
            .args(["simulate", "--seed", seed, "--events", "--out", dir.path().to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
    }
    let mut problems = Vec::new();
    for file in ["results.csv", "summary.json", "events.csv", "manifest.json"] {
        let read = |i: usize| std::fs::read(dirs[i].path().join(file)).unwrap_or_default();
        if read(0) != read(1) {
            problems.push(format!("{file} differs for equal seeds"));
        }
        if read(0) == read(2) {
            problems.push(format!("{file} identical for different seeds"));
        }
    }
    check(problems.is_empty(), "equal seeds give equal bytes, different seeds differ".into(), problems.join("; "))
}

fn heatmap_radius() -> Outcome {
    let cfg = SimConfig::table1(PlacementType::A, 1);
    let h = cfg.effective_height();
    let cell = 0.1;
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    for probe_gbps in [20.0, 30.0, 40.0, 50.0] {
        let probe = probe_gbps * 1e9;
        let grid = heatmap(&cfg, 1.0 / cell, probe, None).map_err(|e| e.to_string())?;
        let r = coverage_radius(&cfg.ap_link(), probe / cfg.link.bandwidth_hz).map_err(|e| e.to_string())?;
        let horizontal = (r * r - h * h).sqrt();
        let (mut inner, mut outer) = (0.0f64, f64::INFINITY);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                let rho = (x - 5.0).hypot(y - 5.0);
                match grid.label(i, j) {
                    Region::Illumination => inner = inner.max(rho),
                    _ => outer = outer.min(rho),
                }
                let mirrored = [grid.value(grid.nx - 1 - i, j), grid.value(i, grid.ny - 1 - j), grid.value(j, i)];
                let v = grid.value(i, j);
                if mirrored.iter().any(|m| (m - v).abs() > 1e-9 * v.abs().max(1.0)) {
                    problems.push(format!("asymmetric value at ({i}, {j})"));
                }
            }
        }
        if !(horizontal - inner <= cell && outer - horizontal <= cell && inner <= horizontal && outer >= horizontal) {
            problems.push(format!(
                "{probe_gbps} Gbps: radius {horizontal:.4} m vs boundary [{inner:.4}, {outer:.4}] m"
            ));
        }
        notes.push(format!("{probe_gbps} Gbps: r_h = {horizontal:.3} m in [{inner:.3}, {outer:.3}]"));
    }
    problems.truncate(5);
    check(problems.is_empty(), notes.join("; "), problems.join("; "))
}

fn power_split() -> Outcome {
    let mut configs = Vec::new();
    for p in [PlacementType::B, PlacementType::C, PlacementType::D, PlacementType::E, PlacementType::F] {
        let base = SimConfig::table1(p, 4);
        let axis = SweepAxis::ApCount(vec![4, 8, 12, 16]);
        configs.extend(sweep_configs(&base, &axis, &[], &[]).into_iter().map(|(_, c)| c));
    }
    configs.push(SimConfig::table1(PlacementType::A, 1));
    for dbm in [-10.0, 0.0, 7.5, 20.0] {
        for s in Scenario::evaluation_set() {
            let mut c = SimConfig::table1(s.placement, s.n_aps);
            c.p_o_w = thzplace::linkbudget::dbm_to_watts(dbm);
            configs.push(c);
        }
    }
    let mut worst = 0.0f64;
    for c in &configs {
        let nodes = c.constellation().map_err(|e| e.to_string())?;
        let total = exact_sum(nodes.nodes.iter().map(|_| c.ap_link().p_t_w));
        worst = worst.max((total - c.p_o_w).abs() / (f64::EPSILON * c.p_o_w));
    }
    check(
        worst <= 1.0,
        format!("{} configurations, max |sum P_t - P_o| = {worst:.1} ulp of P_o", configs.len()),
        format!("max |sum P_t - P_o| = {worst:.1} ulp of P_o (limit 1)"),
    )
}

/// Neumaier summation, so the check sees the split error rather than the
/// checker's own accumulation error.
fn exact_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

fn los_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let samples = 100_000;
    let mut disagreements = 0;
    let mut blocked_scenes = 0;
    for _ in 0..1000 {
        let ap = Point3::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(2.0..4.0));
        let user = Point3::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(1.0..2.0));
        let bodies: Vec<BodyCylinder> = (0..rng.gen_range(1..6))
            .map(|_| {
                let near = rng.gen_range(0.0..1.0);
                let (x, y) = (
                    user.x + near * (ap.x - user.x) + rng.gen_range(-0.5..0.5),
                    user.y + near * (ap.y - user.y) + rng.gen_range(-0.5..0.5),
                );
                BodyCylinder { center: [x, y], radius: rng.gen_range(0.05..0.4), height: rng.gen_range(1.0..2.5) }
            })
            .collect();
        let exclude = Some(0);
        let exact = los_blocked(&ap, &user, &bodies, exclude);
        let sampled = (0..samples).any(|k| {
            let t = (k as f64 + 0.5) / samples as f64;
            let p = Point3::new(ap.x + t * (user.x - ap.x), ap.y + t * (user.y - ap.y), ap.z + t * (user.z - ap.z));
            bodies.iter().enumerate().skip(1).any(|(_, c)| {
                (p.x - c.center[0]).hypot(p.y - c.center[1]) <= c.radius && (0.0..=c.height).contains(&p.z)
            })
        });
        blocked_scenes += usize::from(exact);
        disagreements += usize::from(exact != sampled);
    }
    check(
        disagreements == 0,
        format!("0 disagreements over 1000 scenes ({blocked_scenes} blocked), {samples} samples per segment"),
        format!("{disagreements} disagreements over 1000 scenes"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Lambert-W identity", lambert_identity),
        ("2 radius oracle equivalence", radius_oracle),
        ("3 rate/radius consistency", rate_radius_consistency),
        ("4 height-correction round trip", height_round_trip),
        ("5 H-sweep shape", fig6_shape),
        ("6 blockage degradation", fig7_blockage),
        ("7 CLI determinism", cli_determinism),
        ("8 heat-map radius consistency", heatmap_radius),
        ("9 power-split conservation", power_split),
        ("10 blockage geometry oracle", los_oracle),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
