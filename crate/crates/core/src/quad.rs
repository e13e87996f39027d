//! Composite Simpson quadrature.

use crate::error::{Error, Result};

/// Composite Simpson rule with `n` subintervals (`n` rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        let x = lo + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// Simpson with interval doubling until two successive estimates differ by
/// less than `rel_tol` relative (or `abs_tol` absolute).
pub fn simpson_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let mut n = 64;
    let mut prev = simpson(f, lo, hi, n);
    while n < (1 << 24) {
        n *= 2;
        let next = simpson(f, lo, hi, n);
        if (next - prev).abs() <= rel_tol * next.abs() || (next - prev).abs() <= abs_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "Simpson on [{lo}, {hi}] not converged at {n} intervals"
    )))
}

/// Adaptive Simpson over consecutive pieces `[breaks[k], breaks[k+1]]`.
pub fn simpson_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += simpson_adaptive(f, w[0], w[1], rel_tol, abs_tol)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let v = simpson(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_converges() {
        let v = simpson_adaptive(&|x: f64| (-x).exp(), 0.0, 30.0, 1e-12, 0.0).unwrap();
        assert!((v - (1.0 - (-30.0f64).exp())).abs() < 1e-11);
    }
}
