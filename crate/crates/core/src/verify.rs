//! Brute-force oracles and grid checks of the regularity conditions.
//!
//! Nothing here uses the closed-form proximity operators: the prox oracle
//! minimizes the defining objective directly, and the TV check integrates
//! the two densities by quadrature.

use crate::envelope::{divergence_1d, NonsmoothTerm, ProxPair, Side};
use crate::error::{check_dim, Error, Result};
use crate::legendre::{LegendreKind, LegendreMap};
use crate::potentials::CompositePotential;
use crate::quad::simpson_piecewise;

const GRID_POINTS: usize = 200;
const GOLDEN_TOL: f64 = 1e-10;

/// Minimizes `g(v) + D_psi(v, x) / lambda` (left) or `g(v) + D_psi(x, v) / lambda`
/// (right) over the real line by a 200-point scan followed by golden-section
/// refinement.
///
/// The minimizer lies between `x` and the point of `argmin g` nearest to `x`,
/// since both terms are unimodal; the scan bracket is that segment padded by
/// `10 lambda` times a local scale from the Hessian of `psi` at `x`.
pub fn grid_prox_oracle(
    psi: &LegendreMap,
    g: &NonsmoothTerm,
    lambda: f64,
    side: Side,
    x: f64,
) -> Result<f64> {
    check_dim(1, psi.dim())?;
    check_dim(1, g.dim())?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("oracle at non-finite point {x}")));
    }
    // lambda * g + D has the same minimizer and keeps the divergence unscaled
    let objective = |v: f64| -> f64 {
        let gv = g.value_1d(0, v);
        if gv.is_infinite() {
            return f64::INFINITY;
        }
        let d = match side {
            Side::Left => divergence_1d(psi, 0, v, x),
            Side::Right => divergence_1d(psi, 0, x, v),
        };
        let total = lambda * gv + d;
        if total.is_nan() {
            f64::INFINITY
        } else {
            total
        }
    };

    let anchor = g.nearest_minimizer_1d(0, x);
    let weight = match g {
        NonsmoothTerm::WeightedL1 { weights } => weights[0],
        _ => 1.0,
    };
    let scale = weight.max(1.0) / psi.hess_1d(0, x);
    let pad = (10.0 * lambda * scale).clamp(1e-6, 1e6);
    let lo = x.min(anchor) - pad;
    let hi = x.max(anchor) + pad;

    let mut cands: Vec<f64> = (0..GRID_POINTS)
        .map(|j| lo + (hi - lo) * j as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let specials: Vec<f64> = std::iter::once(anchor)
        .chain(std::iter::once(x))
        .chain(g.kinks_1d(0))
        .filter(|v| *v > lo && *v < hi)
        .collect();
    cands.extend(&specials);
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();

    let values: Vec<f64> = cands.iter().map(|&v| objective(v)).collect();
    let (best, best_val) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    if !best_val.is_finite() {
        return Err(Error::Domain(format!(
            "prox objective is infinite on the whole bracket around {x}"
        )));
    }
    if best == 0 || best == cands.len() - 1 {
        return Err(Error::BracketFailure { x });
    }

    let refined = golden_section(&objective, cands[best - 1], cands[best + 1]);
    let mut arg = refined;
    let mut val = objective(refined);
    for &s in &specials {
        let sv = objective(s);
        if sv <= val {
            arg = s;
            val = sv;
        }
    }
    Ok(arg)
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= GOLDEN_TOL * (1.0 + 0.5 * (a + b).abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Largest `|central difference - analytic| / (1 + |analytic|)` over all
/// points and coordinates.
pub fn fd_gradient_check<F, G>(f: F, grad: G, points: &[Vec<f64>], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        let analytic = grad(p)?;
        check_dim(p.len(), analytic.len())?;
        let mut probe = p.clone();
        for i in 0..p.len() {
            probe[i] = p[i] + h;
            let up = f(&probe)?;
            probe[i] = p[i] - h;
            let down = f(&probe)?;
            probe[i] = p[i];
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - analytic[i]).abs() / (1.0 + analytic[i].abs()));
        }
    }
    Ok(worst)
}

/// Minimum of `f(x-h) - 2 f(x) + f(x+h)` over the interior of a uniform
/// `n`-point grid on `[lo, hi]`. Nonnegative (up to rounding) certifies
/// convexity on the grid.
pub fn convexity_grid_check<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("grid needs at least 3 points, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|k| f(lo + k as f64 * h)).collect();
    Ok(vals
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min))
}

/// Modified self-concordance constant of the hypentropy map with scales
/// `beta`: `1 / (2 * 3^{3/2} * min_i beta_i)`.
pub fn self_concordance_constant(beta: &[f64]) -> Result<f64> {
    let min = beta.iter().copied().fold(f64::INFINITY, f64::min);
    if beta.is_empty() || !(min > 0.0) {
        return Err(Error::InvalidParameter("beta entries must be positive".into()));
    }
    Ok(1.0 / (2.0 * 3f64.powf(1.5) * min))
}

/// Relative smoothness constant of the quadratic-`psi` envelope of a weighted
/// l1 term with respect to the hypentropy map:
/// `max_i sup_{|t| <= lambda alpha_i / m_i} m_i sqrt(t^2 + beta_i^2) / lambda`.
pub fn relative_smoothness_constant(
    alpha_w: &[f64],
    beta: &[f64],
    lambda: f64,
    m: &[f64],
) -> Result<f64> {
    check_dim(alpha_w.len(), beta.len())?;
    check_dim(alpha_w.len(), m.len())?;
    if !(lambda > 0.0) || m.iter().any(|v| !(*v > 0.0)) || beta.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter(
            "lambda and m must be positive, beta nonnegative".into(),
        ));
    }
    Ok(alpha_w
        .iter()
        .zip(beta)
        .zip(m)
        .map(|((a, b), mi)| {
            let t = lambda * a / mi;
            mi * t.hypot(*b) / lambda
        })
        .fold(0.0, f64::max))
}

/// Largest `||grad f(x)||` in the local norm `[hess phi(x)]^{-1}` over the
/// given points; the relative Lipschitz constant on that grid.
pub fn relative_lipschitz_on_grid<G>(grad: G, phi: &LegendreMap, points: &[Vec<f64>]) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        let gr = grad(p)?;
        let h = phi.hess_diag(p)?;
        let norm2: f64 = gr.iter().zip(&h).map(|(g, hh)| g * g / hh).sum();
        worst = worst.max(norm2.sqrt());
    }
    Ok(worst)
}

/// Grid certification of relative strong convexity (`env - alpha phi`) and
/// relative smoothness (`beta_g phi - env`) on sampled coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub m_phi: f64,
    pub beta_g: f64,
    pub alpha: f64,
    /// Per sampled coordinate: `(i, min second difference of env - alpha phi,
    /// min second difference of beta_g phi - env)`.
    pub per_dim: Vec<(usize, f64, f64)>,
    pub min_second_difference_convexity: f64,
    pub min_second_difference_smoothness: f64,
    pub convexity_pass: bool,
    pub smoothness_pass: bool,
}

pub const GRID_TOLERANCE: f64 = -1e-8;

/// Runs both convexity grid checks of the envelope in `pair` against the
/// mirror map `phi` on each coordinate in `dims` (0-based).
pub fn check_assumptions(
    pair: &ProxPair,
    phi: &LegendreMap,
    alpha: f64,
    beta_g: f64,
    dims: &[usize],
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<AssumptionReport> {
    check_dim(pair.dim(), phi.dim())?;
    let m_phi = match phi.kind() {
        LegendreKind::Hypentropy => self_concordance_constant(phi.params())?,
        _ => 0.0,
    };
    let mut per_dim = Vec::with_capacity(dims.len());
    for &i in dims {
        if i >= phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi.dim(),
                got: i + 1,
            });
        }
        let env = |x: f64| pair.env_value_1d(i, x).unwrap_or(f64::NAN);
        let cvx = convexity_grid_check(|x| env(x) - alpha * phi.value_1d(i, x), lo, hi, n)?;
        let smo = convexity_grid_check(|x| beta_g * phi.value_1d(i, x) - env(x), lo, hi, n)?;
        per_dim.push((i, cvx, smo));
    }
    let min_c = per_dim.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let min_s = per_dim.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(AssumptionReport {
        m_phi,
        beta_g,
        alpha,
        per_dim,
        min_second_difference_convexity: min_c,
        min_second_difference_smoothness: min_s,
        convexity_pass: min_c >= GRID_TOLERANCE,
        smoothness_pass: min_s >= GRID_TOLERANCE,
    })
}

/// Total variation between the target `exp(-U)` and the surrogate
/// `exp(-f - env)` on the real line, by piecewise Simpson quadrature.
///
/// Returns `(tv_estimate, lambda * g_lip^2 / rho)`.
pub fn tv_bound_check_1d(
    g_lip: f64,
    rho: f64,
    lambda: f64,
    potential: &CompositePotential,
    psi: &LegendreMap,
) -> Result<(f64, f64)> {
    check_dim(1, potential.dim())?;
    check_dim(1, psi.dim())?;
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let bound = lambda * g_lip * g_lip / rho;
    if matches!(potential.g, NonsmoothTerm::Zero { .. }) {
        return Ok((0.0, bound));
    }
    let pair = ProxPair::new(psi.clone(), potential.g.clone(), Side::Left, lambda)?;
    let u = |x: f64| potential.value(&[x]).unwrap_or(f64::INFINITY);
    let u_lambda = |x: f64| {
        let f = potential.f.value(&[x]).unwrap_or(f64::INFINITY);
        f + pair.env_value_1d(0, x).unwrap_or(f64::INFINITY)
    };
    let shift = u(0.0).min(u_lambda(0.0));
    if !shift.is_finite() {
        return Err(Error::Domain("potential is infinite at the origin".into()));
    }

    // grow the truncation interval until both densities have decayed by e^-40
    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        if u(lo).min(u_lambda(lo)) - shift >= 40.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..60 {
        if u(hi).min(u_lambda(hi)) - shift >= 40.0 {
            break;
        }
        hi *= 2.0;
    }

    let mut breaks = vec![lo, hi];
    breaks.extend(potential.g.kinks_1d(0).into_iter().filter(|k| *k > lo && *k < hi));
    if let NonsmoothTerm::WeightedL1 { weights } = &potential.g {
        // branch boundaries of the quadratic-psi prox
        if matches!(psi.kind(), LegendreKind::SquaredEuclidean | LegendreKind::WeightedQuadratic) {
            let m = psi.hess_1d(0, 0.0);
            let t = lambda * weights[0] / m;
            breaks.extend([-t, t].into_iter().filter(|k| *k > lo && *k < hi));
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let p = |x: f64| (-(u(x) - shift)).exp();
    let q = |x: f64| (-(u_lambda(x) - shift)).exp();
    let z = simpson_piecewise(&p, &breaks, 1e-10, 1e-300)?;
    let z_lambda = simpson_piecewise(&q, &breaks, 1e-10, 1e-300)?;
    let tv = 0.5
        * simpson_piecewise(&|x: f64| (p(x) / z - q(x) / z_lambda).abs(), &breaks, 1e-10, 1e-14)?;
    Ok((tv, bound))
}
