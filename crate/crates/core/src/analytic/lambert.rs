//! Principal branch of the Lambert W function on the real line.

use std::f64::consts::E;

use crate::error::{domain, Result};

const BRANCH_POINT: f64 = -1.0 / E;
const MAX_HALLEY_STEPS: usize = 64;

/// Arguments this close below `-1/e` are treated as rounding noise.
const BRANCH_SLACK: f64 = 4.0 * f64::EPSILON;

/// Returns `w >= -1` with `w * exp(w) = x`.
///
/// Halley iteration, seeded by the branch-point series near `-1/e` and by
/// Winitzki's approximation elsewhere. The update is written in terms of
/// `w - x e^{-w}` so large arguments never overflow.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return domain("lambert_w0 of NaN");
    }
    if x < BRANCH_POINT {
        if BRANCH_POINT - x <= BRANCH_SLACK {
            return Ok(-1.0);
        }
        return domain(format!("lambert_w0 needs x ≥ -1/e, got {x}"));
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
    for _ in 0..MAX_HALLEY_STEPS {
        if w <= -1.0 {
            // Halley's denominator vanishes at the branch point.
            w = -1.0 + 1e-12;
        }
        let t = w - x * (-w).exp();
        let wp1 = w + 1.0;
        let step = t / (wp1 - (w + 2.0) * t / (2.0 * wp1));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w.max(-1.0))
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.32 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
    } else {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: bisection on w e^w = x over [-1, max(1, x)].
    fn bisect_w0(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, x.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn special_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
        assert!(lambert_w0(-0.5).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn omega_constant() {
        let omega = 0.567_143_290_409_783_873;
        assert!((lambert_w0(1.0).unwrap() - omega).abs() < 1e-15);
        assert!((bisect_w0(1.0) - omega).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_bisection_across_range() {
        for &x in &[-0.3678, -0.36, -0.3, -0.2707, -0.1, 1e-8, 0.5, 2.0, 10.0, 1e3, 1e8] {
            let w = lambert_w0(x).unwrap();
            assert!((w - bisect_w0(x)).abs() < 1e-12 * (1.0 + w.abs()), "x={x}");
        }
    }

    #[test]
    fn huge_argument_does_not_overflow() {
        let x = 1e300;
        let w = lambert_w0(x).unwrap();
        assert!(w.is_finite());
        assert!(((w.ln() + w) - x.ln()).abs() < 1e-12 * x.ln());
    }

    proptest! {
        #[test]
        fn residual_is_tiny(x in -0.367_879f64..1e6) {
            let w = lambert_w0(x).unwrap();
            prop_assert!(w >= -1.0);
            let resid = (w * w.exp() - x).abs();
            prop_assert!(resid <= 1e-12 * x.abs().max(1e-300) || resid < 1e-300, "x={} w={} r={}", x, w, resid);
        }

        #[test]
        fn near_branch_point(d in 1e-14f64..1e-2) {
            let x = -1.0 / E + d;
            let w = lambert_w0(x).unwrap();
            prop_assert!(w >= -1.0);
            prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs());
        }
    }
}
