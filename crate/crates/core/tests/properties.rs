use proptest::prelude::*;

use thzplace::geometry::{height_correction, los_blocked, segment_hits_cylinder, BodyCylinder, Point3, Room};
use thzplace::linkbudget::{
    achievable_rate, coverage_radius, coverage_radius_bruteforce, lambert_w0, LinkBudgetParams, BRANCH_POINT,
};
use thzplace::mobility::{init_users, MobilityParams};
use thzplace::reporting::detect_crossover;

fn params(f_c_hz: f64, tau: f64, p_t_w: f64) -> LinkBudgetParams {
    LinkBudgetParams { f_c_hz, p_t_w, tau_override: Some(tau), ..LinkBudgetParams::table1() }
}

/// Point-sampling check of the open segment against every non-excluded body.
fn sampled_blocked(a: &Point3, b: &Point3, bodies: &[BodyCylinder], exclude: Option<usize>, n: usize) -> bool {
    (0..n).any(|k| {
        let t = (k as f64 + 0.5) / n as f64;
        let p = Point3::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z));
        bodies.iter().enumerate().any(|(i, c)| {
            Some(i) != exclude
                && (p.x - c.center[0]).hypot(p.y - c.center[1]) <= c.radius
                && (0.0..=c.height).contains(&p.z)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn lambert_residual(e in -9.0f64..6.0) {
        let x = 10f64.powf(e) + BRANCH_POINT + 1e-9;
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
        prop_assert!(w >= -1.0);
    }

    #[test]
    fn radius_matches_bisection(
        f in 100e9f64..1e12,
        tau in 0.0f64..5.0,
        s in 0.01f64..10.0,
        log_p in -6.0f64..-2.0,
    ) {
        let p = params(f, tau, 10f64.powf(log_p));
        let exact = coverage_radius(&p, s).unwrap();
        let oracle = coverage_radius_bruteforce(&p, s).unwrap();
        prop_assert!((exact - oracle).abs() <= 1e-6, "{exact} vs {oracle}");
    }

    #[test]
    fn rate_at_radius_is_target(
        f in 100e9f64..1e12,
        tau in 0.0f64..5.0,
        s in 0.01f64..10.0,
        log_p in -6.0f64..-2.0,
    ) {
        let p = params(f, tau, 10f64.powf(log_p));
        let r = coverage_radius(&p, s).unwrap();
        let rate = achievable_rate(r, &p).unwrap();
        let target = s * p.bandwidth_hz;
        prop_assert!((rate / target - 1.0).abs() <= 1e-9, "{rate} vs {target}");
    }

    // H - h_c = H exp(-x) loses about x / ln 10 digits, so d_C - d_B is kept
    // to room-scale gaps (x <= 7.5).
    #[test]
    fn height_correction_round_trip(h in 0.1f64..10.0, d_b in 0.1f64..10.0, extra in 0.0f64..3.0, tau in 0.0f64..5.0) {
        let d_c = d_b + extra;
        let h_c = height_correction(h, d_b, d_c, tau).unwrap();
        prop_assert!((0.0..h).contains(&h_c) || h_c == 0.0);
        let lhs = h / (h - h_c);
        let rhs = (tau * (d_c - d_b) / 2.0).exp();
        prop_assert!((lhs / rhs - 1.0).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn los_symmetric(
        ax in 0.0f64..10.0, ay in 0.0f64..10.0, az in 0.0f64..4.0,
        bx in 0.0f64..10.0, by in 0.0f64..10.0, bz in 0.0f64..4.0,
        cx in 0.0f64..10.0, cy in 0.0f64..10.0, r in 0.05f64..0.5, h in 0.5f64..3.0,
    ) {
        let (a, b) = (Point3::new(ax, ay, az), Point3::new(bx, by, bz));
        let c = BodyCylinder { center: [cx, cy], radius: r, height: h };
        prop_assert_eq!(segment_hits_cylinder(&a, &b, &c), segment_hits_cylinder(&b, &a, &c));
    }

    #[test]
    fn crossover_antisymmetric(gaps in proptest::collection::vec(-5.0f64..5.0, 2..12), base in 0.0f64..10.0) {
        let h: Vec<f64> = (0..gaps.len()).map(|i| 2.0 + 0.5 * i as f64).collect();
        let first: Vec<(f64, f64)> = h.iter().zip(&gaps).map(|(&h, &g)| (h, base + g)).collect();
        let second: Vec<(f64, f64)> = h.iter().map(|&h| (h, base)).collect();
        let fwd = detect_crossover("m", ("a", "b"), &first, &second).unwrap();
        let rev = detect_crossover("m", ("b", "a"), &second, &first).unwrap();
        prop_assert_eq!(fwd.crossover_h, rev.crossover_h);
        prop_assert_eq!(fwd.bracket, rev.bracket);
        if let (Some((g0, g1)), Some((r0, r1))) = (fwd.gaps, rev.gaps) {
            prop_assert_eq!((g0, g1), (-r0, -r1));
            prop_assert!(g0 * g1 < 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn los_matches_sampling_oracle(
        ax in 0.0f64..10.0, ay in 0.0f64..10.0, az in 2.0f64..4.0,
        bx in 0.0f64..10.0, by in 0.0f64..10.0, bz in 1.0f64..2.0,
        bodies in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.1f64..0.4, 1.0f64..2.5), 1..6),
    ) {
        let (a, b) = (Point3::new(ax, ay, az), Point3::new(bx, by, bz));
        let bodies: Vec<BodyCylinder> =
            bodies.iter().map(|&(x, y, r, h)| BodyCylinder { center: [x, y], radius: r, height: h }).collect();
        let exclude = (bodies.len() > 1).then_some(0);
        prop_assert_eq!(los_blocked(&a, &b, &bodies, exclude), sampled_blocked(&a, &b, &bodies, exclude, 20_000));
    }
}

#[test]
fn mobility_stays_in_room_and_respects_speed() {
    let room = Room::new(10.0, 6.0, 3.0).unwrap();
    let params = MobilityParams::table1();
    let mut crowd = init_users(&room, 10, 11, &params);
    let dt = 0.01;
    for _ in 0..100_000 {
        let before: Vec<([f64; 2], f64)> = crowd.users.iter().map(|u| (u.position, u.velocity)).collect();
        crowd.step(&room, dt, &params);
        for (u, (p, v)) in crowd.users.iter().zip(before) {
            assert!(room.contains_xy(u.position[0], u.position[1]));
            let moved = (u.position[0] - p[0]).hypot(u.position[1] - p[1]);
            assert!(moved <= v * dt + 1e-12, "moved {moved} at speed {v}");
            assert!((0.5..=1.5).contains(&u.velocity));
        }
    }
}
