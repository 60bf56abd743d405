//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 50;
const RESIDUAL_TOLERANCE: f64 = 1e-12;

/// Smallest argument on the real principal branch, `-1/e`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Solves `w * exp(w) = x` for `w >= -1`.
///
/// Halley iteration started from a branch-aware guess: a series around the
/// branch point for `x` near `-1/e`, a log-based asymptote for large `x`, and
/// Winitzki's approximation in between. Converges in a handful of iterations
/// over the whole domain; the loop is capped at 50.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT {
        return Err(Error::domain("lambert_w0", format!("x = {x} is below -1/e")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == BRANCH_POINT {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(x);
    let scale = x.abs().max(1.0);
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let residual = w * ew - x;
        if residual == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // Sitting on the branch point in floating point.
            w = -1.0;
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * residual / (2.0 * wp1);
        let step = residual / denom;
        let next = (w - step).max(-1.0);
        let converged = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs())
            && residual.abs() <= RESIDUAL_TOLERANCE * scale;
        w = next;
        if converged {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.32 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_point_omega() -> f64 {
        // w = exp(-w) is a contraction near the omega constant.
        let mut w = 0.5f64;
        for _ in 0..200 {
            w = (-w).exp();
        }
        w
    }

    #[test]
    fn known_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        let omega = lambert_w0(1.0).unwrap();
        assert!((omega - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert!((omega - fixed_point_omega()).abs() < 1e-15);
        assert_eq!(lambert_w0(BRANCH_POINT).unwrap(), -1.0);
    }

    #[test]
    fn rejects_below_branch() {
        assert!(lambert_w0(-0.4).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn near_branch_point() {
        let x = BRANCH_POINT + 1e-9;
        let w = lambert_w0(x).unwrap();
        assert!(w > -1.0);
        assert!((w * w.exp() - x).abs() <= 1e-12);
    }

    #[test]
    fn small_arguments_track_identity() {
        for &x in &[1e-300, 1e-20, -1e-12, 1e-8] {
            let w = lambert_w0(x).unwrap();
            assert!(((w - x) / x).abs() < 1e-7, "x={x} w={w}");
        }
    }
}
