//! Bregman divergences, left/right Bregman–Moreau envelopes and the matching
//! Bregman proximity operators.
//!
//! For a Legendre map `psi`, a nonsmooth term `g` and `lambda > 0`:
//!
//! ```text
//! left  prox(x) = argmin_v  g(v) + D_psi(v, x) / lambda
//! right prox(x) = argmin_v  g(v) + D_psi(x, v) / lambda
//! ```
//!
//! and the envelope is the attained minimum. Everything is separable, so
//! operators act coordinate by coordinate. Closed forms are used where they
//! exist; every other `(psi, g, side)` combination is solved numerically by a
//! grid scan refined with golden-section search.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::legendre::{LegendreKind, LegendreMap};
use crate::special::{lambert_w0, lambert_w0_of_exp};
use crate::verify;

/// Value of a Bregman divergence on the extended reals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence {
    Finite(f64),
    /// The divergence overflowed to `+inf`.
    Infinite,
}

impl Divergence {
    fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Divergence::Finite(v.max(0.0))
        } else {
            Divergence::Infinite
        }
    }

    /// The divergence as an `f64`, with `Infinite` mapped to `+inf`.
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Divergence::Finite(_))
    }
}

/// Scalar divergence `D(a, b)` on coordinate `i`, written per kind so that it
/// loses no precision as `a -> b`.
pub(crate) fn divergence_1d(map: &LegendreMap, i: usize, a: f64, b: f64) -> f64 {
    let t = a - b;
    match map.kind() {
        LegendreKind::SquaredEuclidean => 0.5 * t * t,
        LegendreKind::WeightedQuadratic => 0.5 * map.params()[i] * t * t,
        LegendreKind::Hypentropy => {
            let beta = map.params()[i];
            let ra = a.hypot(beta);
            let rb = b.hypot(beta);
            let d_asinh = map.grad_1d(i, a) - map.grad_1d(i, b);
            // both terms are O(t); rounding can push the difference below zero
            (a * d_asinh - t * (a + b) / (ra + rb)).max(0.0)
        }
        LegendreKind::Exponential => {
            if t == 0.0 {
                0.0
            } else {
                b.exp() * (t.exp_m1() - t)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// The nonsmooth part `g` of a composite potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonsmoothTerm {
    Zero { dim: usize },
    /// `g(x) = sum_i w_i |x_i|`.
    WeightedL1 { weights: Vec<f64> },
    /// Indicator of the box `prod_i [lower_i, upper_i]`.
    BoxIndicator { lower: Vec<f64>, upper: Vec<f64> },
}

impl NonsmoothTerm {
    pub fn zero(dim: usize) -> Self {
        NonsmoothTerm::Zero { dim }
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        let g = NonsmoothTerm::WeightedL1 { weights };
        g.validate()?;
        Ok(g)
    }

    pub fn box_indicator(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let g = NonsmoothTerm::BoxIndicator { lower, upper };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NonsmoothTerm::Zero { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("dimension must be positive".into()));
                }
            }
            NonsmoothTerm::WeightedL1 { weights } => {
                if weights.is_empty() {
                    return Err(Error::InvalidParameter("empty weight vector".into()));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "l1 weights must be finite and nonnegative, got {w}"
                    )));
                }
            }
            NonsmoothTerm::BoxIndicator { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::InvalidParameter("empty box".into()));
                }
                for (a, b) in lower.iter().zip(upper) {
                    if !(a < b) || a.is_nan() || b.is_nan() {
                        return Err(Error::InvalidParameter(format!(
                            "box bounds must satisfy lower < upper, got [{a}, {b}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            NonsmoothTerm::Zero { dim } => *dim,
            NonsmoothTerm::WeightedL1 { weights } => weights.len(),
            NonsmoothTerm::BoxIndicator { lower, .. } => lower.len(),
        }
    }

    /// The one-dimensional term acting on coordinate `i`.
    pub fn restrict(&self, i: usize) -> NonsmoothTerm {
        match self {
            NonsmoothTerm::Zero { .. } => NonsmoothTerm::Zero { dim: 1 },
            NonsmoothTerm::WeightedL1 { weights } => NonsmoothTerm::WeightedL1 {
                weights: vec![weights[i]],
            },
            NonsmoothTerm::BoxIndicator { lower, upper } => NonsmoothTerm::BoxIndicator {
                lower: vec![lower[i]],
                upper: vec![upper[i]],
            },
        }
    }

    pub fn value_1d(&self, i: usize, x: f64) -> f64 {
        match self {
            NonsmoothTerm::Zero { .. } => 0.0,
            NonsmoothTerm::WeightedL1 { weights } => weights[i] * x.abs(),
            NonsmoothTerm::BoxIndicator { lower, upper } => {
                if x >= lower[i] && x <= upper[i] {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter().enumerate().map(|(i, &v)| self.value_1d(i, v)).sum())
    }

    /// Point of `argmin g_i` closest to `x`.
    pub(crate) fn nearest_minimizer_1d(&self, i: usize, x: f64) -> f64 {
        match self {
            NonsmoothTerm::Zero { .. } => x,
            NonsmoothTerm::WeightedL1 { weights } => {
                if weights[i] == 0.0 {
                    x
                } else {
                    0.0
                }
            }
            NonsmoothTerm::BoxIndicator { lower, upper } => x.clamp(lower[i], upper[i]),
        }
    }

    /// Points where `g_i` is not differentiable.
    pub(crate) fn kinks_1d(&self, i: usize) -> Vec<f64> {
        match self {
            NonsmoothTerm::Zero { .. } => Vec::new(),
            NonsmoothTerm::WeightedL1 { .. } => vec![0.0],
            NonsmoothTerm::BoxIndicator { lower, upper } => vec![lower[i], upper[i]],
        }
    }
}

/// `D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>`.
pub fn bregman_div(map: &LegendreMap, x: &[f64], y: &[f64]) -> Result<Divergence> {
    check_dim(map.dim(), x.len())?;
    check_dim(map.dim(), y.len())?;
    if let Some(v) = x.iter().chain(y).find(|v| v.is_nan()) {
        return Err(Error::Domain(format!("non-numeric argument {v}")));
    }
    let total: f64 = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&a, &b))| divergence_1d(map, i, a, b))
        .sum();
    Ok(Divergence::from_f64(total))
}

/// Which prox rule serves a given `(psi, g, side)` combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxRule {
    Identity,
    SoftThreshold,
    HypentropyLeftL1,
    ExponentialLeftL1,
    ExponentialRightL1,
    BoxClamp,
    Numeric,
}

/// A Legendre map paired with a nonsmooth term, an envelope side and a
/// smoothing parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxPair {
    pub psi: LegendreMap,
    pub g: NonsmoothTerm,
    pub side: Side,
    pub lambda: f64,
}

impl ProxPair {
    pub fn new(psi: LegendreMap, g: NonsmoothTerm, side: Side, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameter must be positive, got {lambda}"
            )));
        }
        g.validate()?;
        check_dim(psi.dim(), g.dim())?;
        Ok(Self {
            psi,
            g,
            side,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.psi.clone(), self.g.clone(), self.side, lambda)
    }

    /// The one-dimensional pair acting on coordinate `i`.
    pub fn restrict(&self, i: usize) -> ProxPair {
        ProxPair {
            psi: self.psi.restrict(i),
            g: self.g.restrict(i),
            side: self.side,
            lambda: self.lambda,
        }
    }

    pub fn rule(&self) -> ProxRule {
        use LegendreKind as K;
        match (&self.g, self.psi.kind(), self.side) {
            (NonsmoothTerm::Zero { .. }, _, _) => ProxRule::Identity,
            (NonsmoothTerm::WeightedL1 { .. }, K::SquaredEuclidean | K::WeightedQuadratic, _) => {
                ProxRule::SoftThreshold
            }
            (NonsmoothTerm::WeightedL1 { .. }, K::Hypentropy, Side::Left) => {
                ProxRule::HypentropyLeftL1
            }
            (NonsmoothTerm::WeightedL1 { .. }, K::Exponential, Side::Left) => {
                ProxRule::ExponentialLeftL1
            }
            (NonsmoothTerm::WeightedL1 { .. }, K::Exponential, Side::Right) => {
                ProxRule::ExponentialRightL1
            }
            (
                NonsmoothTerm::BoxIndicator { .. },
                K::SquaredEuclidean | K::WeightedQuadratic,
                _,
            ) => ProxRule::BoxClamp,
            _ => ProxRule::Numeric,
        }
    }

    /// Prox on coordinate `i`.
    pub fn prox_1d(&self, i: usize, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("prox of non-finite value {x}")));
        }
        let lambda = self.lambda;
        let weight = |i: usize| match &self.g {
            NonsmoothTerm::WeightedL1 { weights } => weights[i],
            _ => 0.0,
        };
        match self.rule() {
            ProxRule::Identity => Ok(x),
            ProxRule::SoftThreshold => {
                let m = match self.psi.kind() {
                    LegendreKind::WeightedQuadratic => self.psi.params()[i],
                    _ => 1.0,
                };
                let mu = lambda * weight(i) / m;
                Ok(if x.abs() <= mu {
                    0.0
                } else {
                    x.signum() * (x.abs() - mu)
                })
            }
            ProxRule::HypentropyLeftL1 => {
                let sigma = self.psi.params()[i];
                let t = weight(i) * lambda;
                let thr = sigma * t.sinh();
                let u = self.psi.grad_1d(i, x);
                Ok(if x > thr {
                    sigma * (u - t).sinh()
                } else if x < -thr {
                    sigma * (u + t).sinh()
                } else {
                    0.0
                })
            }
            ProxRule::ExponentialLeftL1 => {
                let t = weight(i) * lambda;
                if x > t.ln_1p() {
                    // e^x - t > 1
                    Ok((x.exp() - t).ln())
                } else if t < 1.0 && x < (-t).ln_1p() {
                    Ok((x.exp() + t).ln())
                } else {
                    Ok(0.0)
                }
            }
            ProxRule::ExponentialRightL1 => {
                let t = weight(i) * lambda;
                if t == 0.0 {
                    return Ok(x);
                }
                if x > t {
                    Ok(lambert_w0(-t * (-x).exp())? + x)
                } else if x < -t {
                    Ok(lambert_w0_of_exp(t.ln() - x)? + x)
                } else {
                    Ok(0.0)
                }
            }
            ProxRule::BoxClamp => match &self.g {
                NonsmoothTerm::BoxIndicator { lower, upper } => Ok(x.clamp(lower[i], upper[i])),
                _ => unreachable!(),
            },
            ProxRule::Numeric => verify::grid_prox_oracle(
                &self.psi.restrict(i),
                &self.g.restrict(i),
                lambda,
                self.side,
                x,
            ),
        }
    }

    /// Envelope contribution of coordinate `i`.
    pub fn env_value_1d(&self, i: usize, x: f64) -> Result<f64> {
        let p = self.prox_1d(i, x)?;
        let d = match self.side {
            Side::Left => divergence_1d(&self.psi, i, p, x),
            Side::Right => divergence_1d(&self.psi, i, x, p),
        };
        Ok(self.g.value_1d(i, p) + d.max(0.0) / self.lambda)
    }

    /// Envelope gradient on coordinate `i`.
    pub fn env_grad_1d(&self, i: usize, x: f64) -> Result<f64> {
        let p = self.prox_1d(i, x)?;
        Ok(self.env_grad_from_prox(i, x, p))
    }

    fn env_grad_from_prox(&self, i: usize, x: f64, p: f64) -> f64 {
        match self.side {
            Side::Left => self.psi.hess_1d(i, x) * (x - p) / self.lambda,
            Side::Right => (self.psi.grad_1d(i, x) - self.psi.grad_1d(i, p)) / self.lambda,
        }
    }

    /// Bregman proximity operator, applied coordinatewise.
    pub fn prox(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        x.iter()
            .enumerate()
            .map(|(i, &v)| self.prox_1d(i, v))
            .collect()
    }

    /// Bregman–Moreau envelope value.
    pub fn env_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut total = 0.0;
        for (i, &v) in x.iter().enumerate() {
            total += self.env_value_1d(i, v)?;
        }
        Ok(total)
    }

    /// Gradient of the Bregman–Moreau envelope.
    ///
    /// Left: `hess psi(x) (x - prox(x)) / lambda`.
    /// Right: `(grad psi(x) - grad psi(prox(x))) / lambda`.
    pub fn env_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.env_grad_into(x, &mut out)?;
        Ok(out)
    }

    pub fn env_grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), out.len())?;
        for (i, (&v, o)) in x.iter().zip(out.iter_mut()).enumerate() {
            *o = self.env_grad_1d(i, v)?;
        }
        Ok(())
    }
}
