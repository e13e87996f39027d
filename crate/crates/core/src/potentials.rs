//! Composite potentials `U = f + g` and their smooth surrogates
//! `U_lambda = f + env_{lambda, g}`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envelope::{NonsmoothTerm, ProxPair};
use crate::error::{check_dim, Error, Result};

/// Logistic regression data: `n` rows of `d` features, stored row-major,
/// with binary labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticData {
    pub n: usize,
    pub d: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl LogisticData {
    pub fn new(n: usize, d: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("logistic data must be nonempty".into()));
        }
        check_dim(n * d, x.len())?;
        check_dim(n, y.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design matrix must be finite".into()));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        Ok(Self { n, d, x, y })
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.x[k * self.d..(k + 1) * self.d]
    }

    /// Reads a CSV with header `x_1,...,x_d,y`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let d = rdr
            .headers()?
            .len()
            .checked_sub(1)
            .filter(|d| *d > 0)
            .ok_or_else(|| Error::Format("logistic CSV needs x columns and a y column".into()))?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::Format(format!(
                    "expected {} columns, found {}",
                    d + 1,
                    rec.len()
                )));
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("not a number: {field:?}")))?;
                if j < d {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
        }
        let n = y.len();
        Self::new(n, d, x, y)
    }
}

/// Logistic sigmoid, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Smooth part `f` of the potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothTerm {
    Zero { dim: usize },
    /// `sum_n [log(1 + exp<theta, x_n>) - y_n <theta, x_n>] + c_ridge |theta|^2`.
    LogisticRidge { data: LogisticData, c_ridge: f64 },
}

impl SmoothTerm {
    pub fn logistic_ridge(data: LogisticData, c_ridge: f64) -> Result<Self> {
        if !(c_ridge.is_finite() && c_ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge coefficient must be nonnegative, got {c_ridge}"
            )));
        }
        Ok(SmoothTerm::LogisticRidge { data, c_ridge })
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothTerm::Zero { dim } => *dim,
            SmoothTerm::LogisticRidge { data, .. } => data.d,
        }
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        Ok(match self {
            SmoothTerm::Zero { .. } => 0.0,
            SmoothTerm::LogisticRidge { data, c_ridge } => {
                let mut total = 0.0;
                for k in 0..data.n {
                    let z = dot(data.row(k), theta);
                    total += softplus(z) - data.y[k] * z;
                }
                total + c_ridge * dot(theta, theta)
            }
        })
    }

    pub fn grad_into(&self, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), theta.len())?;
        check_dim(self.dim(), out.len())?;
        match self {
            SmoothTerm::Zero { .. } => out.fill(0.0),
            SmoothTerm::LogisticRidge { data, c_ridge } => {
                for (o, t) in out.iter_mut().zip(theta) {
                    *o = 2.0 * c_ridge * t;
                }
                for k in 0..data.n {
                    let row = data.row(k);
                    let r = sigmoid(dot(row, theta)) - data.y[k];
                    for (o, xv) in out.iter_mut().zip(row) {
                        *o += r * xv;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gradient of the smooth term.
pub fn smooth_grad(f: &SmoothTerm, theta: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; theta.len()];
    f.grad_into(theta, &mut out)?;
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositePotential {
    pub f: SmoothTerm,
    pub g: NonsmoothTerm,
}

impl CompositePotential {
    pub fn new(f: SmoothTerm, g: NonsmoothTerm) -> Result<Self> {
        g.validate()?;
        check_dim(f.dim(), g.dim())?;
        Ok(Self { f, g })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.f.value(theta)? + self.g.value(theta)?)
    }
}

/// `U_lambda = f + env_{lambda, g}`: the potential the samplers differentiate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePotential {
    pub base: CompositePotential,
    pub pair: ProxPair,
}

impl SurrogatePotential {
    pub fn new(base: CompositePotential, pair: ProxPair) -> Result<Self> {
        if pair.g != base.g {
            return Err(Error::InvalidParameter(
                "envelope term must be the potential's nonsmooth term".into(),
            ));
        }
        check_dim(base.dim(), pair.dim())?;
        Ok(Self { base, pair })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.base.f.value(theta)? + self.pair.env_value(theta)?)
    }

    /// `grad f + grad env`, written into `out`.
    pub fn grad_into(&self, theta: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.f.grad_into(theta, out)?;
        for (i, (o, &t)) in out.iter_mut().zip(theta).enumerate() {
            *o += self.pair.env_grad_1d(i, t)?;
        }
        Ok(())
    }
}

/// Gradient of the surrogate potential.
pub fn surrogate_grad(s: &SurrogatePotential, theta: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; theta.len()];
    s.grad_into(theta, &mut out)?;
    Ok(out)
}

/// Bernoulli labels with success probability `sigmoid(<theta, x_n>)`, drawing
/// one uniform per row from `rng`.
pub fn logistic_labels<R: Rng>(x: &[f64], d: usize, theta: &[f64], rng: &mut R) -> Vec<f64> {
    x.chunks(d)
        .map(|row| {
            let p = sigmoid(dot(row, theta));
            let u: f64 = rng.random();
            if u < p {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Synthetic logistic regression data: standard normal features and labels
/// drawn at `theta_star`. Rows are generated in order; each row takes `d`
/// normal variates and then one uniform for its label.
pub fn generate_logistic_data(
    d: usize,
    n: usize,
    theta_star: &[f64],
    seed: u64,
) -> Result<LogisticData> {
    check_dim(d, theta_star.len())?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = x.len();
        for _ in 0..d {
            x.push(rng.sample::<f64, _>(StandardNormal));
        }
        let row = &x[start..];
        y.extend(logistic_labels(row, d, theta_star, &mut rng));
    }
    LogisticData::new(n, d, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::Side;
    use crate::legendre::LegendreMap;

    fn central_fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    fn small_instance() -> SmoothTerm {
        let data = generate_logistic_data(3, 5, &[0.5, -1.0, 0.2], 11).unwrap();
        SmoothTerm::logistic_ridge(data, 0.1).unwrap()
    }

    #[test]
    fn zero_term_gradient() {
        let f = SmoothTerm::Zero { dim: 3 };
        assert_eq!(smooth_grad(&f, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn single_sample_gradient() {
        let data = LogisticData::new(1, 1, vec![1.0], vec![1.0]).unwrap();
        let f = SmoothTerm::logistic_ridge(data, 0.0).unwrap();
        assert_eq!(smooth_grad(&f, &[0.0]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn logistic_gradient_matches_fd() {
        let f = small_instance();
        for theta in [[0.0, 0.0, 0.0], [0.3, -0.7, 1.1], [-2.0, 4.0, 0.5]] {
            let g = smooth_grad(&f, &theta).unwrap();
            let fd = central_fd(|t| f.value(t).unwrap(), &theta, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() / (1.0 + a.abs()) < 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn surrogate_examples() {
        let g0 = NonsmoothTerm::zero(2);
        let pot = CompositePotential::new(SmoothTerm::Zero { dim: 2 }, g0.clone()).unwrap();
        let pair =
            ProxPair::new(LegendreMap::squared_euclidean(2).unwrap(), g0, Side::Left, 0.1).unwrap();
        let s = SurrogatePotential::new(pot, pair).unwrap();
        assert_eq!(surrogate_grad(&s, &[1.0, -1.0]).unwrap(), vec![0.0, 0.0]);

        let g = NonsmoothTerm::weighted_l1(vec![1.0, 2.0, 3.0]).unwrap();
        let pot = CompositePotential::new(SmoothTerm::Zero { dim: 3 }, g.clone()).unwrap();
        let pair = ProxPair::new(
            LegendreMap::weighted_quadratic(vec![0.5, 1.0, 1.5]).unwrap(),
            g,
            Side::Left,
            0.01,
        )
        .unwrap();
        let s = SurrogatePotential::new(pot, pair).unwrap();
        let gr = surrogate_grad(&s, &[2.0, -3.0, 1.0]).unwrap();
        let expected = [1.0, -2.0, 3.0];
        for (a, b) in gr.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_logistic_matches_fd() {
        let f = small_instance();
        let g = NonsmoothTerm::weighted_l1(vec![1.0, 2.0, 0.5]).unwrap();
        let pot = CompositePotential::new(f, g.clone()).unwrap();
        let pair =
            ProxPair::new(LegendreMap::hypentropy(vec![1.0, 4.0, 9.0]).unwrap(), g, Side::Left, 0.05)
                .unwrap();
        let s = SurrogatePotential::new(pot, pair).unwrap();
        let theta = [0.8, -1.3, 2.2];
        let gr = surrogate_grad(&s, &theta).unwrap();
        let fd = central_fd(|t| s.value(t).unwrap(), &theta, 1e-6);
        for (a, b) in gr.iter().zip(&fd) {
            assert!((a - b).abs() / (1.0 + a.abs()) < 1e-5, "{a} vs {b}");
        }
        // sum of the parts
        let parts: Vec<f64> = smooth_grad(&s.base.f, &theta)
            .unwrap()
            .iter()
            .zip(s.pair.env_grad(&theta).unwrap())
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(gr, parts);
    }

    #[test]
    fn data_generation() {
        let a = generate_logistic_data(4, 50, &[1.0, 0.0, -1.0, 0.5], 3).unwrap();
        let b = generate_logistic_data(4, 50, &[1.0, 0.0, -1.0, 0.5], 3).unwrap();
        assert_eq!(a, b);
        let c = generate_logistic_data(4, 50, &[1.0, 0.0, -1.0, 0.5], 4).unwrap();
        assert_ne!(a.x, c.x);

        let n = 10_000;
        let z = generate_logistic_data(2, n, &[0.0, 0.0], 9).unwrap();
        let mean = z.y.iter().sum::<f64>() / n as f64;
        let sd = (0.25 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn saturated_logits_give_all_ones() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..300)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs() + 0.01)
            .collect();
        // every logit is at least 1e5 * 0.01, so p rounds to exactly 1
        let labels = logistic_labels(&x, 3, &[1e5, 0.0, 0.0], &mut rng);
        assert!(labels.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mismatched_terms_are_rejected() {
        let g = NonsmoothTerm::weighted_l1(vec![1.0]).unwrap();
        let other = NonsmoothTerm::weighted_l1(vec![2.0]).unwrap();
        let pot = CompositePotential::new(SmoothTerm::Zero { dim: 1 }, g).unwrap();
        let pair =
            ProxPair::new(LegendreMap::squared_euclidean(1).unwrap(), other, Side::Left, 0.1).unwrap();
        assert!(SurrogatePotential::new(pot, pair).is_err());
        assert!(LogisticData::new(1, 1, vec![1.0], vec![0.5]).is_err());
    }
}
