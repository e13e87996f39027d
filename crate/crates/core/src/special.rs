//! Scalar special functions used by the closed-form proximity operators.

use std::f64::consts::E;

use crate::error::{Error, Result};

const BRANCH_POINT: f64 = -1.0 / E;
const BRANCH_SLACK: f64 = 1e-12;

/// Principal branch `W0` of the Lambert W function: the `w >= -1` solving
/// `w e^w = x`, for `x >= -1/e`.
///
/// Arguments within `1e-12` below the branch point are treated as the branch
/// point itself. Solved by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    if x < BRANCH_POINT - BRANCH_SLACK {
        return Err(Error::Domain(format!(
            "lambert_w0 needs x >= -1/e, got {x}"
        )));
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(x);
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).max(-1.0);
        let done = (next - w).abs() <= 1e-14 * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// `W0(e^l)`, usable when `e^l` itself overflows.
pub fn lambert_w0_of_exp(l: f64) -> Result<f64> {
    if l.is_nan() {
        return Err(Error::Domain("lambert_w0_of_exp of NaN".into()));
    }
    if l < 700.0 {
        return lambert_w0(l.exp());
    }
    // w + ln w = l, Newton from the asymptotic guess
    let mut w = l - l.ln();
    for _ in 0..50 {
        let f = w + w.ln() - l;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < 0.0 {
        // series about the branch point in p = sqrt(2(ex + 1))
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn clamps_just_below_branch_point() {
        assert_eq!(lambert_w0(-1.0 / E - 5e-13).unwrap(), -1.0);
        assert!(matches!(lambert_w0(-1.0 / E - 1e-9), Err(Error::Domain(_))));
        assert!(lambert_w0(-1.0).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn defining_identity() {
        for &x in &[-0.36, -0.3, -0.1, -1e-8, 1e-10, 0.5, 1.0, 10.0, 1e3, 1e8, 1e100] {
            let w = lambert_w0(x).unwrap();
            let back = w * w.exp();
            assert!((back - x).abs() <= 1e-12 * x.abs(), "{x}: {back}");
        }
    }

    #[test]
    fn of_exp_matches_direct() {
        for &l in &[-5.0, 0.0, 3.0, 50.0, 600.0] {
            let a = lambert_w0_of_exp(l).unwrap();
            let b = lambert_w0(f64::exp(l)).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let w = lambert_w0_of_exp(1000.0).unwrap();
        assert!((w + w.ln() - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn near_branch_point() {
        let x = -1.0 / E + 1e-12;
        let w = lambert_w0(x).unwrap();
        assert!(w > -1.0 && w < -0.99999);
        assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs());
    }
}
