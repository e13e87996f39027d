//! Separable Legendre maps and their first/second-order calculus.
//!
//! Every map here is a sum of scalar Legendre functions, one per coordinate,
//! so Hessians are diagonal and are returned as plain vectors. The samplers
//! use a map both as the mirror map (primal/dual transport and diffusion
//! preconditioner) and as the divergence generator of a Bregman envelope.
//!
//! | kind                | value                          | gradient            | conjugate gradient |
//! |---------------------|--------------------------------|---------------------|--------------------|
//! | `SquaredEuclidean`  | `x^2 / 2`                      | `x`                 | `y`                |
//! | `WeightedQuadratic` | `m x^2 / 2`                    | `m x`               | `y / m`            |
//! | `Hypentropy`        | `x asinh(x/b) - sqrt(x^2+b^2)` | `asinh(x/b)`        | `b sinh(y)`        |
//! | `Exponential`       | `exp(x)`                       | `exp(x)`            | `ln(y)`, `y > 0`   |

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegendreKind {
    SquaredEuclidean,
    WeightedQuadratic,
    Hypentropy,
    Exponential,
}

/// A separable Legendre function on `R^dim`.
///
/// `params` holds the per-coordinate weights `m_i` for `WeightedQuadratic`
/// and the scales `beta_i` for `Hypentropy`; it is empty for the other kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreMap {
    kind: LegendreKind,
    params: Vec<f64>,
    dim: usize,
}

/// Inverse hyperbolic sine, sign-symmetric so that large negative arguments
/// do not cancel.
pub fn arsinh(x: f64) -> f64 {
    let a = x.abs();
    let r = if a > 1e8 {
        a.ln() + std::f64::consts::LN_2
    } else if a > 0.5 {
        (a + (1.0 + a * a).sqrt()).ln()
    } else {
        // ln(1 + a + (sqrt(1+a^2) - 1)) with the inner difference rewritten
        let s = (1.0 + a * a).sqrt();
        (a + a * a / (1.0 + s)).ln_1p()
    };
    if x.is_sign_negative() {
        -r
    } else {
        r
    }
}

/// `hypot` without its overflow-safe slow path when no overflow is possible.
fn radius(x: f64, p: f64) -> f64 {
    if x.abs() < 1e150 && p < 1e150 {
        (x * x + p * p).sqrt()
    } else {
        x.hypot(p)
    }
}

fn check_params(kind: LegendreKind, params: &[f64]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{kind:?} map needs at least one parameter"
        )));
    }
    if let Some(p) = params.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "{kind:?} parameters must be positive and finite, got {p}"
        )));
    }
    Ok(())
}

impl LegendreMap {
    pub fn squared_euclidean(dim: usize) -> Result<Self> {
        Self::new(LegendreKind::SquaredEuclidean, Vec::new(), dim)
    }

    pub fn weighted_quadratic(m: Vec<f64>) -> Result<Self> {
        let dim = m.len();
        Self::new(LegendreKind::WeightedQuadratic, m, dim)
    }

    pub fn hypentropy(beta: Vec<f64>) -> Result<Self> {
        let dim = beta.len();
        Self::new(LegendreKind::Hypentropy, beta, dim)
    }

    pub fn exponential(dim: usize) -> Result<Self> {
        Self::new(LegendreKind::Exponential, Vec::new(), dim)
    }

    /// Builds a map, validating the parameter vector against `kind`.
    pub fn new(kind: LegendreKind, params: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        match kind {
            LegendreKind::WeightedQuadratic | LegendreKind::Hypentropy => {
                check_params(kind, &params)?;
                check_dim(dim, params.len())?;
            }
            LegendreKind::SquaredEuclidean | LegendreKind::Exponential => {
                if !params.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "{kind:?} map takes no parameters"
                    )));
                }
            }
        }
        Ok(Self { kind, params, dim })
    }

    pub fn kind(&self) -> LegendreKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The one-dimensional map acting on coordinate `i`.
    pub fn restrict(&self, i: usize) -> LegendreMap {
        let params = if self.params.is_empty() {
            Vec::new()
        } else {
            vec![self.params[i]]
        };
        LegendreMap {
            kind: self.kind,
            params,
            dim: 1,
        }
    }

    #[inline]
    fn p(&self, i: usize) -> f64 {
        self.params[i]
    }

    pub fn value_1d(&self, i: usize, x: f64) -> f64 {
        match self.kind {
            LegendreKind::SquaredEuclidean => 0.5 * x * x,
            LegendreKind::WeightedQuadratic => 0.5 * self.p(i) * x * x,
            LegendreKind::Hypentropy => {
                let b = self.p(i);
                x * arsinh(x / b) - x.hypot(b)
            }
            LegendreKind::Exponential => x.exp(),
        }
    }

    pub fn grad_1d(&self, i: usize, x: f64) -> f64 {
        match self.kind {
            LegendreKind::SquaredEuclidean => x,
            LegendreKind::WeightedQuadratic => self.p(i) * x,
            LegendreKind::Hypentropy => arsinh(x / self.p(i)),
            LegendreKind::Exponential => x.exp(),
        }
    }

    pub fn conj_grad_1d(&self, i: usize, y: f64) -> Result<f64> {
        Ok(match self.kind {
            LegendreKind::SquaredEuclidean => y,
            LegendreKind::WeightedQuadratic => y / self.p(i),
            LegendreKind::Hypentropy => self.p(i) * y.sinh(),
            LegendreKind::Exponential => {
                if !(y > 0.0) {
                    return Err(Error::Domain(format!(
                        "exponential conjugate gradient needs y > 0, got {y}"
                    )));
                }
                y.ln()
            }
        })
    }

    pub fn hess_1d(&self, i: usize, x: f64) -> f64 {
        match self.kind {
            LegendreKind::SquaredEuclidean => 1.0,
            LegendreKind::WeightedQuadratic => self.p(i),
            LegendreKind::Hypentropy => 1.0 / radius(x, self.p(i)),
            LegendreKind::Exponential => x.exp(),
        }
    }

    /// Third derivative of the scalar map on coordinate `i`.
    pub fn third_1d(&self, i: usize, x: f64) -> f64 {
        match self.kind {
            LegendreKind::SquaredEuclidean | LegendreKind::WeightedQuadratic => 0.0,
            LegendreKind::Hypentropy => {
                let r = x.hypot(self.p(i));
                -x / (r * r * r)
            }
            LegendreKind::Exponential => x.exp(),
        }
    }

    pub fn conj_hess_inv_sqrt_1d(&self, i: usize, y: f64) -> Result<f64> {
        Ok(match self.kind {
            LegendreKind::SquaredEuclidean => 1.0,
            LegendreKind::WeightedQuadratic => self.p(i).sqrt(),
            LegendreKind::Hypentropy => 1.0 / (self.p(i) * y.cosh()).sqrt(),
            LegendreKind::Exponential => {
                if !(y > 0.0) {
                    return Err(Error::Domain(format!(
                        "exponential conjugate Hessian needs y > 0, got {y}"
                    )));
                }
                y.sqrt()
            }
        })
    }

    /// `phi(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(x.iter().enumerate().map(|(i, &v)| self.value_1d(i, v)).sum())
    }

    /// `grad phi(x)`, coordinatewise.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(x.iter().enumerate().map(|(i, &v)| self.grad_1d(i, v)).collect())
    }

    /// `grad phi*(y)`, the inverse of [`LegendreMap::grad`].
    pub fn conj_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        y.iter()
            .enumerate()
            .map(|(i, &v)| self.conj_grad_1d(i, v))
            .collect()
    }

    /// Diagonal of `hess phi(x)`.
    pub fn hess_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(x.iter().enumerate().map(|(i, &v)| self.hess_1d(i, v)).collect())
    }

    /// Diagonal of `[hess phi*(y)]^{-1/2}`.
    pub fn conj_hess_inv_sqrt_diag(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        y.iter()
            .enumerate()
            .map(|(i, &v)| self.conj_hess_inv_sqrt_1d(i, v))
            .collect()
    }
}
