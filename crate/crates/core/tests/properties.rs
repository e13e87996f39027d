use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use bplmc::diagnostics::{
    ks_marginal, laplace_marginal, tv_marginal, uniform_marginal, w1_marginal, MarginalReference,
};
use bplmc::envelope::{bregman_div, NonsmoothTerm, ProxPair, Side};
use bplmc::legendre::{LegendreKind, LegendreMap};
use bplmc::potentials::{
    generate_logistic_data, smooth_grad, surrogate_grad, CompositePotential, SmoothTerm,
    SurrogatePotential,
};
use bplmc::samplers::{run_chain, ChainConfig, Variant};
use bplmc::special::lambert_w0;
use bplmc::verify::grid_prox_oracle;

fn map_1d(kind: LegendreKind, p: f64) -> LegendreMap {
    let params = match kind {
        LegendreKind::SquaredEuclidean | LegendreKind::Exponential => vec![],
        _ => vec![p],
    };
    LegendreMap::new(kind, params, 1).unwrap()
}

fn kinds() -> impl Strategy<Value = (LegendreKind, f64)> {
    prop_oneof![
        Just(LegendreKind::SquaredEuclidean),
        Just(LegendreKind::WeightedQuadratic),
        Just(LegendreKind::Hypentropy),
        Just(LegendreKind::Exponential),
    ]
    .prop_flat_map(|k| (Just(k), 0.1f64..10.0))
    .prop_map(|(k, p)| match k {
        LegendreKind::SquaredEuclidean | LegendreKind::Exponential => (k, 1.0),
        _ => (k, p),
    })
}

proptest! {
    #[test]
    fn legendre_inverse_identity((kind, p) in kinds(), x in -10.0f64..10.0) {
        let m = map_1d(kind, p);
        let back = m.conj_grad_1d(0, m.grad_1d(0, x)).unwrap();
        let tol = if kind == LegendreKind::Exponential { 1e-9 } else { 1e-10 };
        prop_assert!((back - x).abs() <= tol * x.abs().max(1.0), "{kind:?} {p} {x} -> {back}");
    }

    #[test]
    fn legendre_derivatives_match_differences((kind, p) in kinds(), x in -5.0f64..5.0) {
        let m = map_1d(kind, p);
        let h = 1e-6;
        let fd = (m.value_1d(0, x + h) - m.value_1d(0, x - h)) / (2.0 * h);
        let g = m.grad_1d(0, x);
        prop_assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0));
        let h = 1e-5;
        let fd = (m.grad_1d(0, x + h) - m.grad_1d(0, x - h)) / (2.0 * h);
        let hs = m.hess_1d(0, x);
        prop_assert!(hs > 0.0);
        prop_assert!((fd - hs).abs() <= 1e-4 * hs.abs().max(1.0));
    }

    #[test]
    fn lambert_round_trip(w in -1.0f64..20.0) {
        let back = lambert_w0(w * w.exp()).unwrap();
        prop_assert!((back - w).abs() <= 1e-10 * (1.0 + w.abs()));
    }

    #[test]
    fn lambert_is_increasing(a in -0.36787944f64..1e3, step in 1e-6f64..10.0) {
        prop_assert!(lambert_w0(a + step).unwrap() > lambert_w0(a).unwrap());
    }
}

/// The five closed-form combinations with their parameter draws.
fn closed_form_pair() -> impl Strategy<Value = (ProxPair, f64)> {
    (0usize..5, 0.1f64..3.0, 0.01f64..0.3, 0.2f64..5.0, -5.0f64..5.0, 0.1f64..4.0, any::<bool>()).prop_map(
        |(case, alpha, lambda, p, x, width, right)| {
            let side = if right { Side::Right } else { Side::Left };
            let l1 = NonsmoothTerm::weighted_l1(vec![alpha]).unwrap();
            let (psi, g, side, x) = match case {
                0 => (map_1d(LegendreKind::WeightedQuadratic, p), l1, side, x),
                1 => (map_1d(LegendreKind::Hypentropy, p), l1, Side::Left, x),
                2 => (LegendreMap::exponential(1).unwrap(), l1, Side::Left, x.min(3.0)),
                3 => (LegendreMap::exponential(1).unwrap(), l1, Side::Right, x.min(3.0)),
                _ => {
                    let b = NonsmoothTerm::box_indicator(vec![-width], vec![width / 2.0]).unwrap();
                    (map_1d(LegendreKind::WeightedQuadratic, p), b, side, x)
                }
            };
            (ProxPair::new(psi, g, side, lambda).unwrap(), x)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_forms_match_oracle((pair, x) in closed_form_pair()) {
        let closed = pair.prox_1d(0, x).unwrap();
        let oracle = grid_prox_oracle(&pair.psi, &pair.g, pair.lambda, pair.side, x).unwrap();
        prop_assert!((closed - oracle).abs() <= 1e-6, "{:?}: {closed} vs {oracle}", pair.rule());
    }

    #[test]
    fn envelope_sits_below_g_and_decreases_in_lambda((pair, x) in closed_form_pair(), shrink in 0.01f64..0.99) {
        let g = pair.g.value_1d(0, x);
        let inf_g = 0.0;
        let big = pair.env_value_1d(0, x).unwrap();
        let small = pair.with_lambda(pair.lambda * shrink).unwrap().env_value_1d(0, x).unwrap();
        let slack = 1e-12 * g.abs().max(1.0);
        prop_assert!(inf_g - slack <= big);
        prop_assert!(big <= small + slack * 1e3, "{big} > {small}");
        prop_assert!(small <= g + slack * 1e3);
    }
}

#[test]
fn envelope_increases_to_g_as_lambda_shrinks() {
    let psi = map_1d(LegendreKind::Hypentropy, 1.0);
    let g = NonsmoothTerm::weighted_l1(vec![2.0]).unwrap();
    for x in [-3.0, -0.4, 0.0, 0.7, 2.5] {
        let values: Vec<f64> = (1..=6)
            .map(|k| {
                ProxPair::new(psi.clone(), g.clone(), Side::Left, 10f64.powi(-k))
                    .unwrap()
                    .env_value_1d(0, x)
                    .unwrap()
            })
            .collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-15), "{values:?}");
        let gx = g.value_1d(0, x);
        assert!((values[5] - gx).abs() <= 1e-5 * gx.max(1.0), "{x}: {values:?}");
    }
}

proptest! {
    #[test]
    fn weighted_quadratic_divergence_is_strongly_convex(
        m in prop::collection::vec(0.1f64..5.0, 1..6),
        seed in any::<u64>(),
    ) {
        let d = m.len();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let dist2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let lo = m.iter().cloned().fold(f64::INFINITY, f64::min);
        let psi = LegendreMap::weighted_quadratic(m.clone()).unwrap();
        let div = bregman_div(&psi, &x, &y).unwrap().value();
        prop_assert!(div >= lo / 2.0 * dist2 * (1.0 - 1e-12));
        let flat = LegendreMap::weighted_quadratic(vec![lo; d]).unwrap();
        let div = bregman_div(&flat, &x, &y).unwrap().value();
        prop_assert!((div - lo / 2.0 * dist2).abs() <= 1e-12 * div.max(1.0));
    }

    #[test]
    fn symmetric_maps_have_equal_sides(m in 0.1f64..5.0, alpha in 0.0f64..3.0, lambda in 1e-3f64..1.0, x in -5.0f64..5.0) {
        let psi = map_1d(LegendreKind::WeightedQuadratic, m);
        let g = NonsmoothTerm::weighted_l1(vec![alpha]).unwrap();
        let left = ProxPair::new(psi.clone(), g.clone(), Side::Left, lambda).unwrap();
        let right = ProxPair::new(psi, g, Side::Right, lambda).unwrap();
        prop_assert_eq!(left.prox_1d(0, x).unwrap(), right.prox_1d(0, x).unwrap());
        let (a, b) = (left.env_value_1d(0, x).unwrap(), right.env_value_1d(0, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
    }
}

fn logistic_surrogate(d: usize, seed: u64) -> SurrogatePotential {
    let star: Vec<f64> = (0..d).map(|i| 0.3 * i as f64 - 0.5).collect();
    let data = generate_logistic_data(d, 20, &star, seed).unwrap();
    let f = SmoothTerm::logistic_ridge(data, 0.1).unwrap();
    let g = NonsmoothTerm::weighted_l1((1..=d).map(|i| i as f64).collect()).unwrap();
    let base = CompositePotential::new(f, g.clone()).unwrap();
    let psi = LegendreMap::hypentropy(vec![1.5; d]).unwrap();
    SurrogatePotential::new(base, ProxPair::new(psi, g, Side::Left, 0.05).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surrogate_gradient_is_sum_of_parts(seed in any::<u64>(), scale in 0.1f64..3.0) {
        let s = logistic_surrogate(4, seed);
        let theta: Vec<f64> = (0..4).map(|i| scale * (i as f64 - 1.5)).collect();
        let total = surrogate_grad(&s, &theta).unwrap();
        let f = smooth_grad(&s.base.f, &theta).unwrap();
        let e = s.pair.env_grad(&theta).unwrap();
        for i in 0..4 {
            prop_assert_eq!(total[i], f[i] + e[i]);
        }
    }

    #[test]
    fn smooth_gradient_matches_differences(seed in any::<u64>(), scale in 0.1f64..2.0) {
        let s = logistic_surrogate(3, seed);
        let theta: Vec<f64> = (0..3).map(|i| scale * (1.0 - i as f64)).collect();
        let grad = smooth_grad(&s.base.f, &theta).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (s.base.f.value(&up).unwrap() - s.base.f.value(&down).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0));
        }
    }

    #[test]
    fn retained_rows_follow_schedule(k in 1usize..400, burn_frac in 0.0f64..0.99, thin in 1usize..9) {
        let burn_in = ((k as f64) * burn_frac) as usize;
        let sq = LegendreMap::squared_euclidean(1).unwrap();
        let g = NonsmoothTerm::weighted_l1(vec![1.0]).unwrap();
        let base = CompositePotential::new(SmoothTerm::Zero { dim: 1 }, g.clone()).unwrap();
        let cfg = ChainConfig {
            surrogate: SurrogatePotential::new(base, ProxPair::new(sq.clone(), g, Side::Left, 0.1).unwrap()).unwrap(),
            mirror: sq,
            variant: Variant::Bmumla,
            gamma: 0.05,
            inner_steps: 1,
            iterations: k,
            burn_in,
            thin,
            seed: 1,
            x0: vec![0.0],
        };
        let batch = run_chain(&cfg).unwrap();
        prop_assert_eq!(batch.rows, (k - burn_in).div_ceil(thin));
        prop_assert_eq!(batch.data.len(), batch.rows);
    }
}

#[test]
fn ula_is_the_flat_zero_g_case() {
    let d = 3;
    let s = logistic_surrogate(d, 5);
    let sq = LegendreMap::squared_euclidean(d).unwrap();
    let zero = NonsmoothTerm::zero(d);
    let base = CompositePotential::new(s.base.f.clone(), zero.clone()).unwrap();
    let surrogate = SurrogatePotential::new(base, ProxPair::new(sq.clone(), zero, Side::Left, 0.1).unwrap()).unwrap();
    let gamma = 0.01;
    let cfg = ChainConfig {
        surrogate,
        mirror: sq,
        variant: Variant::Bmumla,
        gamma,
        inner_steps: 1,
        iterations: 2000,
        burn_in: 0,
        thin: 1,
        seed: 77,
        x0: vec![0.2, -0.1, 0.4],
    };
    let batch = run_chain(&cfg).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let mut x = cfg.x0.clone();
    for k in 0..cfg.iterations {
        let xi: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let grad = smooth_grad(&s.base.f, &x).unwrap();
        for i in 0..d {
            x[i] = x[i] - gamma * grad[i] + (2.0 * gamma).sqrt() * xi[i];
        }
        assert_eq!(x.as_slice(), batch.row(k), "step {k}");
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    // endpoints one ulp inside, so jumps at the cuts are seen from within the piece
    (f(a.next_up()) + f(b.next_down()) + inner) * h / 3.0
}

fn references() -> impl Strategy<Value = MarginalReference> {
    prop_oneof![
        (0.2f64..20.0).prop_map(|r| laplace_marginal(r).unwrap()),
        (-5.0f64..0.0, 0.1f64..5.0).prop_map(|(a, w)| uniform_marginal(a, a + w).unwrap()),
    ]
}

proptest! {
    #[test]
    fn reference_pdf_integrates_to_one(r in references()) {
        let (lo, hi) = match r {
            MarginalReference::Laplace { rate } => (-60.0 / rate, 60.0 / rate),
            MarginalReference::Uniform { lower, upper } => (lower - 1.0, upper + 1.0),
        };
        let mut cuts = vec![lo];
        cuts.extend(r.kinks());
        cuts.push(hi);
        let total: f64 = cuts.windows(2).map(|w| simpson(|x| r.pdf(x), w[0], w[1], 20_000)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-8, "{total}");
    }

    #[test]
    fn metrics_are_finite_and_nonnegative(r in references(), seed in any::<u64>(), n in 1usize..300) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        for v in [
            w1_marginal(&xs, &r).unwrap(),
            tv_marginal(&xs, &r, 20, r.default_range()).unwrap(),
            ks_marginal(&xs, &r).unwrap(),
        ] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn w1_scales_with_laplace_rate(rate in 0.2f64..20.0, c in 0.1f64..10.0, seed in any::<u64>()) {
        let r = laplace_marginal(rate).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..200).map(|_| r.sample(&mut rng)).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let a = c * w1_marginal(&xs, &r).unwrap();
        let b = w1_marginal(&scaled, &laplace_marginal(rate / c).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) * 1e3);
    }

    #[test]
    fn tv_is_scale_and_translation_consistent(pow in -2i32..3, shift in -8i32..8, seed in any::<u64>()) {
        // dyadic samples, scales and shifts keep every bin assignment exact
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..300).map(|_| rng.random_range(-1200i32..1200) as f64 / 1024.0).collect();
        let c = 2f64.powi(pow);
        let u = uniform_marginal(-1.0, 1.0).unwrap();
        let base = tv_marginal(&xs, &u, 16, (-1.0, 1.0)).unwrap();

        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let su = uniform_marginal(-c, c).unwrap();
        prop_assert!((tv_marginal(&scaled, &su, 16, (-c, c)).unwrap() - base).abs() <= 1e-12);

        let s = shift as f64;
        let moved: Vec<f64> = xs.iter().map(|x| x + s).collect();
        let mu = uniform_marginal(s - 1.0, s + 1.0).unwrap();
        prop_assert!((tv_marginal(&moved, &mu, 16, (s - 1.0, s + 1.0)).unwrap() - base).abs() <= 1e-12);
        let w_moved = w1_marginal(&moved, &mu).unwrap();
        prop_assert!((w_moved - w1_marginal(&xs, &u).unwrap()).abs() <= 1e-12 * (1.0 + s.abs()));
    }
}
