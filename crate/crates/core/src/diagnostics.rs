//! Reference marginals, one-dimensional distances between samples and
//! references, and posterior-mean error curves.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quad::simpson;
use crate::samplers::SampleBatch;

/// Analytic one-dimensional marginal of a separable target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalReference {
    /// Density `(rate / 2) exp(-rate |x|)`.
    Laplace { rate: f64 },
    Uniform { lower: f64, upper: f64 },
}

pub fn laplace_marginal(rate: f64) -> Result<MarginalReference> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Laplace rate must be positive, got {rate}"
        )));
    }
    Ok(MarginalReference::Laplace { rate })
}

pub fn uniform_marginal(lower: f64, upper: f64) -> Result<MarginalReference> {
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::InvalidParameter(format!(
            "uniform bounds need lower < upper, got [{lower}, {upper}]"
        )));
    }
    Ok(MarginalReference::Uniform { lower, upper })
}

impl MarginalReference {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Laplace { rate } => 0.5 * rate * (-rate * x.abs()).exp(),
            Self::Uniform { lower, upper } => {
                if (lower..=upper).contains(&x) {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Laplace { rate } => {
                if x < 0.0 {
                    0.5 * (rate * x).exp()
                } else {
                    1.0 - 0.5 * (-rate * x).exp()
                }
            }
            Self::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
        }
    }

    /// Generalized inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Laplace { rate } => {
                if u < 0.5 {
                    (2.0 * u).ln() / rate
                } else {
                    -(2.0 * (1.0 - u)).ln() / rate
                }
            }
            Self::Uniform { lower, upper } => lower + u.clamp(0.0, 1.0) * (upper - lower),
        }
    }

    /// Points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Self::Laplace { .. } => vec![0.0],
            Self::Uniform { lower, upper } => vec![lower, upper],
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Self::Laplace { .. } => x.is_finite(),
            Self::Uniform { lower, upper } => (lower..=upper).contains(&x),
        }
    }

    /// Exact draw by inversion.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        // open interval keeps the Laplace quantile finite
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        self.quantile(u)
    }

    /// Central 99.9% quantile span, the default histogram range.
    pub fn default_range(&self) -> (f64, f64) {
        (self.quantile(0.0005), self.quantile(0.9995))
    }

    /// Reference mass of `[lo, hi]` by Simpson's rule, split at kinks.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let mut pts = vec![lo];
        pts.extend(self.kinks().into_iter().filter(|k| *k > lo && *k < hi));
        pts.push(hi);
        pts.windows(2)
            .map(|w| simpson(&|x| self.pdf(x), w[0], w[1], 32))
            .sum()
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Shape("no samples".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Order-statistics estimate of the 1-D Wasserstein-1 distance:
/// `(1/K) sum_i |x_(i) - Q((i - 1/2) / K)|`.
pub fn w1_marginal(samples: &[f64], reference: &MarginalReference) -> Result<f64> {
    let xs = sorted(samples)?;
    let k = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, x)| (x - reference.quantile((i as f64 + 0.5) / k)).abs())
        .sum::<f64>()
        / k)
}

/// Histogram total variation over `bins` equal bins on `range`, plus one
/// overflow cell on each side.
pub fn tv_marginal(
    samples: &[f64],
    reference: &MarginalReference,
    bins: usize,
    range: (f64, f64),
) -> Result<f64> {
    if bins < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 bins, got {bins}")));
    }
    let (lo, hi) = range;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad histogram range [{lo}, {hi}]")));
    }
    if samples.is_empty() {
        return Err(Error::Shape("no samples".into()));
    }
    let width = (hi - lo) / bins as f64;
    // cells: 0 = below, 1..=bins, bins + 1 = above
    let mut counts = vec![0usize; bins + 2];
    for &x in samples {
        let cell = if x < lo {
            0
        } else if x >= hi {
            if x == hi { bins } else { bins + 1 }
        } else {
            1 + (((x - lo) / width) as usize).min(bins - 1)
        };
        counts[cell] += 1;
    }
    let n = samples.len() as f64;
    let mut inside = 0.0;
    let mut total = 0.0;
    for b in 0..bins {
        let a = lo + b as f64 * width;
        let p = reference.mass(a, a + width);
        inside += p;
        total += (counts[b + 1] as f64 / n - p).abs();
    }
    let below = reference.cdf(lo);
    let above = (1.0 - inside - below).max(0.0);
    total += (counts[0] as f64 / n - below).abs();
    total += (counts[bins + 1] as f64 / n - above).abs();
    Ok(0.5 * total)
}

/// Kolmogorov-Smirnov statistic `sup_x |F_n(x) - F(x)|`.
pub fn ks_marginal(samples: &[f64], reference: &MarginalReference) -> Result<f64> {
    let xs = sorted(samples)?;
    let k = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.cdf(x);
            (f - i as f64 / k).abs().max(((i + 1) as f64 / k - f).abs())
        })
        .fold(0.0, f64::max))
}

/// Fraction of samples inside the reference support.
pub fn inside_fraction(samples: &[f64], reference: &MarginalReference) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| reference.contains(x)).count() as f64 / samples.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalDiagnostics {
    /// 1-based coordinate index.
    pub dim: usize,
    pub w1: f64,
    pub tv: f64,
    pub ks: f64,
    pub inside_fraction: f64,
}

/// Per-iteration posterior-mean error curves over replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurves {
    pub err_l2: Vec<f64>,
    pub err_norm2: Vec<f64>,
    /// `per_coordinate[k][i] = |mean_k_i - theta*_i|`.
    pub per_coordinate: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub marginals: Vec<MarginalDiagnostics>,
    pub error_curves: Option<ErrorCurves>,
}

pub const DEFAULT_BINS: usize = 100;

/// Per-coordinate distances of a batch to its reference marginals.
pub fn marginal_diagnostics(
    batch: &SampleBatch,
    references: &[MarginalReference],
) -> Result<Vec<MarginalDiagnostics>> {
    check_dim(batch.cols, references.len())?;
    if batch.rows == 0 {
        return Err(Error::Shape("batch has no rows".into()));
    }
    (0..batch.cols)
        .into_par_iter()
        .map(|j| {
            let col = batch.column(j);
            let r = &references[j];
            Ok(MarginalDiagnostics {
                dim: j + 1,
                w1: w1_marginal(&col, r)?,
                tv: tv_marginal(&col, r, DEFAULT_BINS, r.default_range())?,
                ks: ks_marginal(&col, r)?,
                inside_fraction: inside_fraction(&col, r),
            })
        })
        .collect()
}

/// Error of the replica-averaged iterate against `theta_star` at every
/// retained iteration.
pub fn posterior_mean_error(batches: &[SampleBatch], theta_star: &[f64]) -> Result<ErrorCurves> {
    let first = batches
        .first()
        .ok_or_else(|| Error::Shape("no replicas".into()))?;
    let (rows, d) = (first.rows, first.cols);
    check_dim(d, theta_star.len())?;
    if let Some(b) = batches.iter().find(|b| b.rows != rows || b.cols != d) {
        return Err(Error::Shape(format!(
            "replica of shape {}x{} does not match {rows}x{d}",
            b.rows, b.cols
        )));
    }
    let s = batches.len() as f64;
    let target_norm2: f64 = theta_star.iter().map(|t| t * t).sum();
    let mut curves = ErrorCurves {
        err_l2: Vec::with_capacity(rows),
        err_norm2: Vec::with_capacity(rows),
        per_coordinate: Vec::with_capacity(rows),
    };
    let mut mean = vec![0.0; d];
    for k in 0..rows {
        mean.iter_mut().for_each(|m| *m = 0.0);
        for b in batches {
            for (m, v) in mean.iter_mut().zip(b.row(k)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= s);
        let diff: Vec<f64> = mean.iter().zip(theta_star).map(|(m, t)| (m - t).abs()).collect();
        curves.err_l2.push(diff.iter().map(|e| e * e).sum::<f64>().sqrt());
        let norm2: f64 = mean.iter().map(|m| m * m).sum();
        curves.err_norm2.push((norm2 - target_norm2).abs() / d as f64);
        curves.per_coordinate.push(diff);
    }
    Ok(curves)
}

/// Writes `dim,w1,tv,ks,inside_fraction`.
pub fn write_diagnostics_csv(path: &Path, rows: &[MarginalDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dim", "w1", "tv", "ks", "inside_fraction"])?;
    for r in rows {
        w.write_record([
            r.dim.to_string(),
            r.w1.to_string(),
            r.tv.to_string(),
            r.ks.to_string(),
            r.inside_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `iteration,err_l2,err_norm2,err_1,...` with 1-based iterations.
/// `tracked` selects the 0-based coordinates given their own column.
pub fn write_error_curves_csv(path: &Path, curves: &ErrorCurves, tracked: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iteration".to_string(), "err_l2".into(), "err_norm2".into()];
    header.extend(tracked.iter().map(|i| format!("err_{}", i + 1)));
    w.write_record(&header)?;
    for k in 0..curves.err_l2.len() {
        let mut rec = vec![
            (k + 1).to_string(),
            curves.err_l2[k].to_string(),
            curves.err_norm2[k].to_string(),
        ];
        for &i in tracked {
            let v = curves.per_coordinate[k]
                .get(i)
                .ok_or(Error::DimensionMismatch {
                    expected: i + 1,
                    got: curves.per_coordinate[k].len(),
                })?;
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::simpson_piecewise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn exact_draws(r: &MarginalReference, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| r.sample(&mut rng)).collect()
    }

    #[test]
    fn laplace_reference() {
        let r = laplace_marginal(3.0).unwrap();
        assert_eq!(r.pdf(0.0), 1.5);
        assert_eq!(r.quantile(0.5), 0.0);
        assert!((r.quantile(0.75) - 2f64.ln() / 3.0).abs() < 1e-15);
        let q = r.quantile(0.75);
        let mass = simpson_piecewise(&|x| r.pdf(x), &[-40.0, 0.0, q], 1e-13, 0.0).unwrap();
        assert!((mass - 0.75).abs() < 1e-10);
        assert!(laplace_marginal(0.0).is_err());
    }

    #[test]
    fn normalization_and_inverse() {
        for r in [laplace_marginal(0.7).unwrap(), uniform_marginal(-3.0, 3.0).unwrap()] {
            let (lo, hi) = match r {
                MarginalReference::Laplace { rate } => (-60.0 / rate, 60.0 / rate),
                MarginalReference::Uniform { lower, upper } => (lower, upper),
            };
            let mut breaks = vec![lo];
            breaks.extend(r.kinks().into_iter().filter(|k| *k > lo && *k < hi));
            breaks.push(hi);
            let total = simpson_piecewise(&|x| r.pdf(x), &breaks, 1e-13, 0.0).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "{total}");
            let (a, b) = (r.quantile(1e-3), r.quantile(1.0 - 1e-3));
            for j in 0..=200 {
                let x = a + (b - a) * j as f64 / 200.0;
                assert!((r.quantile(r.cdf(x)) - x).abs() < 1e-10 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn w1_examples() {
        let r = laplace_marginal(1.0).unwrap();
        let k = 1000;
        let exact: Vec<f64> = (0..k).map(|i| r.quantile((i as f64 + 0.5) / k as f64)).collect();
        assert_eq!(w1_marginal(&exact, &r).unwrap(), 0.0);
        let shifted: Vec<f64> = exact.iter().map(|x| x + 0.25).collect();
        assert!((w1_marginal(&shifted, &r).unwrap() - 0.25).abs() < 1e-12);
        let draws = exact_draws(&r, 100_000, 11);
        assert!(w1_marginal(&draws, &r).unwrap() <= 0.02);
        assert!(w1_marginal(&[], &r).is_err());
    }

    #[test]
    fn w1_scales_with_reference() {
        let draws = exact_draws(&laplace_marginal(1.0).unwrap(), 5000, 3);
        let base = w1_marginal(&draws, &laplace_marginal(1.0).unwrap()).unwrap();
        let scaled: Vec<f64> = draws.iter().map(|x| 4.0 * x).collect();
        let w = w1_marginal(&scaled, &laplace_marginal(0.25).unwrap()).unwrap();
        assert!((w - 4.0 * base).abs() < 1e-10);
    }

    #[test]
    fn tv_examples() {
        let r = uniform_marginal(0.0, 1.0).unwrap();
        // one sample at every bin centre matches the binned reference exactly
        let centres: Vec<f64> = (0..100).map(|b| (b as f64 + 0.5) / 100.0).collect();
        assert!(tv_marginal(&centres, &r, 100, (0.0, 1.0)).unwrap() < 1e-12);
        let far = vec![5.0; 50];
        assert!((tv_marginal(&far, &r, 100, (0.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);

        let lap = laplace_marginal(1.0).unwrap();
        let draws = exact_draws(&lap, 100_000, 5);
        assert!(tv_marginal(&draws, &lap, 100, lap.default_range()).unwrap() <= 0.05);
        assert!(tv_marginal(&draws, &lap, 5, (0.0, 1.0)).is_err());
    }

    #[test]
    fn ks_and_inside() {
        let r = uniform_marginal(-1.0, 1.0).unwrap();
        let draws = exact_draws(&r, 20_000, 9);
        assert!(ks_marginal(&draws, &r).unwrap() < 0.02);
        assert_eq!(inside_fraction(&draws, &r), 1.0);
        assert_eq!(inside_fraction(&[0.0, 2.0, -3.0, 1.0], &r), 0.5);
        assert!((ks_marginal(&[5.0], &r).unwrap() - 1.0).abs() < 1e-15);
    }

    fn constant_batch(rows: usize, v: &[f64]) -> SampleBatch {
        let data = (0..rows).flat_map(|_| v.iter().copied()).collect();
        SampleBatch::from_rows(rows, v.len(), data).unwrap()
    }

    #[test]
    fn posterior_mean_examples() {
        let star = [0.5, -1.0];
        let c = posterior_mean_error(&[constant_batch(4, &star), constant_batch(4, &star)], &star)
            .unwrap();
        assert!(c.err_l2.iter().chain(&c.err_norm2).all(|e| *e == 0.0));

        let one = posterior_mean_error(&[constant_batch(3, &[1.5, -1.0])], &star).unwrap();
        assert!(one.err_l2.iter().all(|e| (e - 1.0).abs() < 1e-15));
        assert_eq!(one.per_coordinate[0], vec![1.0, 0.0]);

        let pm = posterior_mean_error(
            &[constant_batch(3, &[1.5, -1.0]), constant_batch(3, &[-0.5, -1.0])],
            &star,
        )
        .unwrap();
        assert!(pm.err_l2.iter().all(|e| e.abs() < 1e-15));

        assert!(posterior_mean_error(&[constant_batch(3, &star), constant_batch(2, &star)], &star)
            .is_err());
        assert!(posterior_mean_error(&[], &star).is_err());
    }

    #[test]
    fn csv_writers() {
        let dir = tempfile::tempdir().unwrap();
        let b = SampleBatch::from_rows(
            4,
            2,
            exact_draws(&laplace_marginal(1.0).unwrap(), 8, 1),
        )
        .unwrap();
        let refs = [laplace_marginal(1.0).unwrap(), laplace_marginal(2.0).unwrap()];
        let rows = marginal_diagnostics(&b, &refs).unwrap();
        assert_eq!(rows.len(), 2);
        let p = dir.path().join("diagnostics.csv");
        write_diagnostics_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("dim,w1,tv,ks,inside_fraction\n"));
        assert_eq!(text.lines().count(), 3);

        let curves = posterior_mean_error(&[b], &[0.0, 0.0]).unwrap();
        let p = dir.path().join("error_curves.csv");
        write_error_curves_csv(&p, &curves, &[0, 1]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("iteration,err_l2,err_norm2,err_1,err_2\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
