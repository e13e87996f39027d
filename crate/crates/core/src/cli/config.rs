//! JSON experiment configuration, named presets, and resolution into a
//! runnable chain configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::expr::Formula;
use crate::diagnostics::{laplace_marginal, uniform_marginal, MarginalReference};
use crate::envelope::{NonsmoothTerm, ProxPair, Side};
use crate::error::{config_err, Error, Result};
use crate::legendre::{LegendreKind, LegendreMap};
use crate::potentials::{
    generate_logistic_data, CompositePotential, LogisticData, SmoothTerm, SurrogatePotential,
};
use crate::samplers::{ChainConfig, Variant, DEFAULT_INNER_STEPS};

/// A per-coordinate parameter: one number for every coordinate, an explicit
/// vector, or a formula over `d` and `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Scalar(f64),
    Vector(Vec<f64>),
    Formula(String),
}

impl ParamSpec {
    pub fn resolve(&self, d: usize, field: &str) -> Result<Vec<f64>> {
        let v = match self {
            ParamSpec::Scalar(x) => vec![*x; d],
            ParamSpec::Vector(v) => {
                if v.len() != d {
                    return Err(config_err(
                        field,
                        format!("expected {d} values, found {}", v.len()),
                    ));
                }
                v.clone()
            }
            ParamSpec::Formula(src) => Formula::parse(src)
                .and_then(|f| f.vector(d))
                .map_err(|e| config_err(field, e.to_string()))?,
        };
        if let Some(k) = v.iter().position(|x| !x.is_finite()) {
            return Err(config_err(field, format!("value at i = {} is not finite", k + 1)));
        }
        Ok(v)
    }
}

impl From<&str> for ParamSpec {
    fn from(s: &str) -> Self {
        ParamSpec::Formula(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: LegendreKind,
    /// `m` for weighted quadratic, `beta` for hypentropy; unused otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamSpec>,
}

impl MapSpec {
    pub fn new(kind: LegendreKind, params: Option<ParamSpec>) -> Self {
        Self { kind, params }
    }

    fn build(&self, d: usize, field: &str) -> Result<(LegendreMap, MapSpec)> {
        let needs_params = matches!(
            self.kind,
            LegendreKind::WeightedQuadratic | LegendreKind::Hypentropy
        );
        let params = match (&self.params, needs_params) {
            (Some(p), true) => p.resolve(d, &format!("{field}.params"))?,
            (None, true) => {
                return Err(config_err(field, format!("{:?} needs `params`", self.kind)))
            }
            _ => Vec::new(),
        };
        let map = LegendreMap::new(self.kind, params.clone(), d)
            .map_err(|e| config_err(field, e.to_string()))?;
        let explicit = MapSpec {
            kind: self.kind,
            params: needs_params.then_some(ParamSpec::Vector(params)),
        };
        Ok((map, explicit))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    AnLaplace,
    AnUniform,
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothKind {
    Zero,
    LogisticRidge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonsmoothKind {
    Zero,
    WeightedL1,
    Box,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
    Both,
}

/// Experiment description as written by a user. Every field is optional; a
/// preset supplies defaults and explicit fields override it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth: Option<SmoothKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_obs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonsmooth: Option<NonsmoothKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Block index `1..=10` of coordinate `i` when `d` is cut into ten equal
/// blocks.
const BLOCK: &str = "ceil(10*i/d)";

impl Preset {
    pub fn defaults(self) -> ExperimentConfig {
        let hyp = |p: &str| Some(MapSpec::new(LegendreKind::Hypentropy, Some(p.into())));
        match self {
            Preset::AnLaplace => ExperimentConfig {
                name: Some("an_laplace".into()),
                dim: Some(100),
                variant: Some(Variant::Bmumla),
                side: Some(Side::Left),
                mirror: hyp("2*sqrt(d-i+1)"),
                envelope: Some(MapSpec::new(LegendreKind::WeightedQuadratic, Some("i/2".into()))),
                smooth: Some(SmoothKind::Zero),
                nonsmooth: Some(NonsmoothKind::WeightedL1),
                weights: Some("i".into()),
                lambda: Some(1e-5),
                gamma: Some(5e-6),
                iterations: Some(100_000),
                burn_in: Some(0),
                ..Default::default()
            },
            Preset::AnUniform => ExperimentConfig {
                name: Some("an_uniform".into()),
                dim: Some(100),
                variant: Some(Variant::Bmumla),
                side: Some(Side::Left),
                mirror: hyp("2*sqrt(d-i+1)"),
                envelope: Some(MapSpec::new(LegendreKind::SquaredEuclidean, None)),
                smooth: Some(SmoothKind::Zero),
                nonsmooth: Some(NonsmoothKind::Box),
                lower: Some("-i".into()),
                upper: Some("i".into()),
                lambda: Some(1.0),
                gamma: Some(0.01),
                iterations: Some(UNIFORM_ITERATIONS),
                burn_in: Some(UNIFORM_BURN_IN),
                thin: Some(UNIFORM_THIN),
                replicas: Some(UNIFORM_REPLICAS),
                ..Default::default()
            },
            Preset::Logistic => {
                let alpha1 = format!("11-{BLOCK}");
                ExperimentConfig {
                    name: Some("logistic".into()),
                    dim: Some(100),
                    variant: Some(Variant::Bmumla),
                    side: Some(Side::Left),
                    mirror: hyp(&format!("2*{BLOCK}^(1/4)")),
                    envelope: hyp(&format!("({alpha1})^2")),
                    smooth: Some(SmoothKind::LogisticRidge),
                    c_ridge: Some(0.1),
                    n_obs: Some(1000),
                    data_seed: Some(2024),
                    nonsmooth: Some(NonsmoothKind::WeightedL1),
                    weights: Some(alpha1.as_str().into()),
                    theta_star: Some(format!("({BLOCK}-1)/10").as_str().into()),
                    lambda: Some(0.01),
                    gamma: Some(5e-4),
                    iterations: Some(4000),
                    burn_in: Some(0),
                    replicas: Some(30),
                    ..Default::default()
                }
            }
        }
    }
}

/// Schedule of the uniform-box preset. The small-beta coordinates relax over
/// roughly 8000 steps, so a single chain sees only a few dozen independent
/// draws per marginal; pooling replicas is what brings the marginals in.
/// Thinning by 50 keeps the pooled batch small at no real cost in
/// effective sample size.
pub const UNIFORM_ITERATIONS: usize = 200_000;
pub const UNIFORM_BURN_IN: usize = 20_000;
pub const UNIFORM_THIN: usize = 50;
pub const UNIFORM_REPLICAS: usize = 32;

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err("<document>", e.to_string()))
    }

    /// Preset defaults overlaid with the explicitly set fields of `self`.
    pub fn with_preset_defaults(&self) -> Self {
        let mut base = self.preset.map(Preset::defaults).unwrap_or_default();
        let top = self;
        overlay!(base, top; name, preset, dim, variant, side, mirror, envelope, smooth, c_ridge,
            n_obs, data_seed, data_csv, nonsmooth, weights, lower, upper, theta_star, gamma,
            lambda, iterations, burn_in, thin, inner_steps, seed, replicas, x0, output_format,
            output_dir);
        base
    }

    /// Validates every field and builds the runnable experiment.
    pub fn resolve(&self) -> Result<Experiment> {
        let c = self.with_preset_defaults();
        let d = c.dim.ok_or_else(|| config_err("dim", "required"))?;
        if d == 0 {
            return Err(config_err("dim", "must be at least 1"));
        }
        let name = c.name.clone().unwrap_or_else(|| "experiment".into());
        let variant = c.variant.unwrap_or(Variant::Bmumla);
        let side = c.side.unwrap_or(Side::Left);
        let sq = MapSpec::new(LegendreKind::SquaredEuclidean, None);
        let (mirror, mirror_spec) = c.mirror.as_ref().unwrap_or(&sq).build(d, "mirror")?;
        let (psi, envelope_spec) = c.envelope.as_ref().unwrap_or(&sq).build(d, "envelope")?;

        let gamma = c.gamma.ok_or_else(|| config_err("gamma", "required"))?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(config_err("gamma", format!("must be positive, got {gamma}")));
        }
        let lambda = c.lambda.ok_or_else(|| config_err("lambda", "required"))?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(config_err("lambda", format!("must be positive, got {lambda}")));
        }
        let iterations = c.iterations.ok_or_else(|| config_err("iterations", "required"))?;
        if iterations == 0 {
            return Err(config_err("iterations", "must be at least 1"));
        }
        let burn_in = c.burn_in.unwrap_or(0);
        if burn_in >= iterations {
            return Err(config_err(
                "burn_in",
                format!("must be below iterations ({iterations}), got {burn_in}"),
            ));
        }
        let thin = c.thin.unwrap_or(1);
        if thin == 0 {
            return Err(config_err("thin", "must be at least 1"));
        }
        let inner_steps = c.inner_steps.unwrap_or(DEFAULT_INNER_STEPS);
        if inner_steps == 0 {
            return Err(config_err("inner_steps", "must be at least 1"));
        }
        let replicas = c.replicas.unwrap_or(1);
        if replicas == 0 {
            return Err(config_err("replicas", "must be at least 1"));
        }
        let seed = c.seed.unwrap_or(0);
        let x0 = c
            .x0
            .clone()
            .unwrap_or(ParamSpec::Scalar(0.0))
            .resolve(d, "x0")?;
        let theta_star = c
            .theta_star
            .as_ref()
            .map(|p| p.resolve(d, "theta_star"))
            .transpose()?;

        let nonsmooth = c.nonsmooth.unwrap_or(NonsmoothKind::Zero);
        let (g, weights, lower, upper) = match nonsmooth {
            NonsmoothKind::Zero => (NonsmoothTerm::zero(d), None, None, None),
            NonsmoothKind::WeightedL1 => {
                let w = c
                    .weights
                    .as_ref()
                    .ok_or_else(|| config_err("weights", "required for weighted_l1"))?
                    .resolve(d, "weights")?;
                let g = NonsmoothTerm::weighted_l1(w.clone())
                    .map_err(|e| config_err("weights", e.to_string()))?;
                (g, Some(w), None, None)
            }
            NonsmoothKind::Box => {
                let lo = c
                    .lower
                    .as_ref()
                    .ok_or_else(|| config_err("lower", "required for box"))?
                    .resolve(d, "lower")?;
                let hi = c
                    .upper
                    .as_ref()
                    .ok_or_else(|| config_err("upper", "required for box"))?
                    .resolve(d, "upper")?;
                let g = NonsmoothTerm::box_indicator(lo.clone(), hi.clone())
                    .map_err(|e| config_err("upper", e.to_string()))?;
                (g, None, Some(lo), Some(hi))
            }
        };

        let smooth = c.smooth.unwrap_or(SmoothKind::Zero);
        let f = match smooth {
            SmoothKind::Zero => SmoothTerm::Zero { dim: d },
            SmoothKind::LogisticRidge => {
                let c_ridge = c.c_ridge.unwrap_or(0.0);
                if !(c_ridge.is_finite() && c_ridge >= 0.0) {
                    return Err(config_err("c_ridge", "must be nonnegative"));
                }
                let data = match &c.data_csv {
                    Some(path) => LogisticData::from_csv(path)
                        .map_err(|e| config_err("data_csv", e.to_string()))?,
                    None => {
                        let n = c
                            .n_obs
                            .ok_or_else(|| config_err("n_obs", "required to generate data"))?;
                        let truth = theta_star.as_ref().ok_or_else(|| {
                            config_err("theta_star", "required to generate data")
                        })?;
                        generate_logistic_data(d, n, truth, c.data_seed.unwrap_or(0))
                            .map_err(|e| config_err("n_obs", e.to_string()))?
                    }
                };
                if data.d != d {
                    return Err(config_err(
                        "data_csv",
                        format!("data has {} features, dim is {d}", data.d),
                    ));
                }
                SmoothTerm::logistic_ridge(data, c_ridge)
                    .map_err(|e| config_err("c_ridge", e.to_string()))?
            }
        };

        let base = CompositePotential::new(f, g.clone())?;
        let pair = ProxPair::new(psi, g, side, lambda)
            .map_err(|e| config_err("envelope", e.to_string()))?;
        let surrogate = SurrogatePotential::new(base, pair)?;
        let chain = ChainConfig {
            surrogate,
            mirror,
            variant,
            gamma,
            inner_steps,
            iterations,
            burn_in,
            thin,
            seed,
            x0: x0.clone(),
        };
        chain
            .validate()
            .map_err(|e| config_err("x0", e.to_string()))?;

        // marginals are analytic only when the target factorizes
        let references = match (smooth, nonsmooth) {
            (SmoothKind::Zero, NonsmoothKind::WeightedL1) => Some(
                weights
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&w| laplace_marginal(w))
                    .collect::<Result<Vec<_>>>()?,
            ),
            (SmoothKind::Zero, NonsmoothKind::Box) => Some(
                lower
                    .as_ref()
                    .unwrap()
                    .iter()
                    .zip(upper.as_ref().unwrap())
                    .map(|(&a, &b)| uniform_marginal(a, b))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => None,
        };

        let output_format = c.output_format.unwrap_or_default();
        let output_dir = c
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(&name));
        let resolved = ExperimentConfig {
            name: Some(name.clone()),
            preset: None,
            dim: Some(d),
            variant: Some(variant),
            side: Some(side),
            mirror: Some(mirror_spec),
            envelope: Some(envelope_spec),
            smooth: Some(smooth),
            c_ridge: (smooth == SmoothKind::LogisticRidge).then(|| c.c_ridge.unwrap_or(0.0)),
            n_obs: c.n_obs.filter(|_| smooth == SmoothKind::LogisticRidge),
            data_seed: c.data_seed.filter(|_| smooth == SmoothKind::LogisticRidge),
            data_csv: c.data_csv.clone().filter(|_| smooth == SmoothKind::LogisticRidge),
            nonsmooth: Some(nonsmooth),
            weights: weights.map(ParamSpec::Vector),
            lower: lower.map(ParamSpec::Vector),
            upper: upper.map(ParamSpec::Vector),
            theta_star: theta_star.clone().map(ParamSpec::Vector),
            gamma: Some(gamma),
            lambda: Some(lambda),
            iterations: Some(iterations),
            burn_in: Some(burn_in),
            thin: Some(thin),
            inner_steps: Some(inner_steps),
            seed: Some(seed),
            replicas: Some(replicas),
            x0: Some(ParamSpec::Vector(x0)),
            output_format: Some(output_format),
            output_dir: Some(output_dir.clone()),
        };
        Ok(Experiment {
            name,
            resolved,
            chain,
            replicas,
            theta_star,
            references,
            output_format,
            output_dir,
        })
    }
}

/// A validated experiment ready to run.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    /// Fully explicit configuration (no preset, vectors inline). Resolving it
    /// again yields the same experiment.
    pub resolved: ExperimentConfig,
    pub chain: ChainConfig,
    pub replicas: usize,
    pub theta_star: Option<Vec<f64>>,
    pub references: Option<Vec<MarginalReference>>,
    pub output_format: OutputFormat,
    pub output_dir: PathBuf,
}

/// Parses a `cmd_diag` reference spec: `laplace:<rate>` or
/// `uniform:<lower>:<upper>`, each part a formula over `d` and `i`.
pub fn parse_reference_spec(spec: &str, d: usize) -> Result<Vec<MarginalReference>> {
    let bad = |m: &str| Error::Format(format!("reference spec {spec:?}: {m}"));
    let mut parts = spec.splitn(2, ':');
    let kind = parts.next().unwrap_or("");
    let rest = parts.next().ok_or_else(|| bad("expected `kind:params`"))?;
    let vector = |src: &str| Formula::parse(src).and_then(|f| f.vector(d));
    match kind {
        "laplace" => vector(rest)?
            .into_iter()
            .map(laplace_marginal)
            .collect(),
        "uniform" => {
            // split on the colon that separates the two formulas
            let (lo, hi) = rest
                .split_once(':')
                .ok_or_else(|| bad("uniform needs `uniform:<lower>:<upper>`"))?;
            vector(lo)?
                .into_iter()
                .zip(vector(hi)?)
                .map(|(a, b)| uniform_marginal(a, b))
                .collect()
        }
        _ => Err(bad("kind must be `laplace` or `uniform`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_to_expected_values() {
        let e = ExperimentConfig {
            preset: Some(Preset::AnLaplace),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(e.chain.surrogate.dim(), 100);
        assert_eq!(e.chain.mirror.params()[0], 20.0);
        assert_eq!(e.chain.mirror.params()[99], 2.0);
        assert_eq!(e.chain.surrogate.pair.psi.params()[9], 5.0);
        assert_eq!(e.chain.gamma, 5e-6);
        assert_eq!(e.references.as_ref().unwrap()[2], laplace_marginal(3.0).unwrap());

        let e = ExperimentConfig {
            preset: Some(Preset::Logistic),
            dim: Some(20),
            n_obs: Some(200),
            replicas: Some(10),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let beta = e.chain.mirror.params();
        assert_eq!(beta[0], 2.0);
        assert_eq!(beta[1], 2.0);
        assert!((beta[19] - 2.0 * 10f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(e.chain.surrogate.pair.psi.params()[0], 100.0);
        assert_eq!(e.chain.surrogate.pair.psi.params()[19], 1.0);
        let star = e.theta_star.as_ref().unwrap();
        assert_eq!(star[0], 0.0);
        assert!((star[19] - 0.9).abs() < 1e-15);
        assert_eq!(e.replicas, 10);
        assert!(e.references.is_none());

        let e = ExperimentConfig {
            preset: Some(Preset::AnUniform),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(e.references.as_ref().unwrap()[4], uniform_marginal(-5.0, 5.0).unwrap());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig {
            preset: Some(Preset::Logistic),
            dim: Some(10),
            n_obs: Some(30),
            ..Default::default()
        };
        let e = cfg.resolve().unwrap();
        let json = serde_json::to_string(&e.resolved).unwrap();
        let again = ExperimentConfig::from_json(&json).unwrap().resolve().unwrap();
        assert_eq!(again.chain, e.chain);
        assert_eq!(again.resolved, e.resolved);
    }

    #[test]
    fn field_level_errors() {
        let cases = [
            (r#"{"preset":"an_laplace","gamma":-1}"#, "gamma"),
            (r#"{"preset":"an_laplace","burn_in":100000}"#, "burn_in"),
            (r#"{"preset":"an_laplace","weights":"foo(i)"}"#, "weights"),
            (r#"{"preset":"an_laplace","weights":[1,2]}"#, "weights"),
            (r#"{"dim":3,"gamma":0.1,"iterations":5}"#, "lambda"),
            (r#"{"preset":"an_uniform","mirror":{"kind":"hypentropy"}}"#, "mirror"),
        ];
        for (json, field) in cases {
            match ExperimentConfig::from_json(json).unwrap().resolve() {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{json}"),
                other => panic!("{json}: {other:?}"),
            }
        }
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn reference_specs() {
        let r = parse_reference_spec("laplace:i", 3).unwrap();
        assert_eq!(r[2], laplace_marginal(3.0).unwrap());
        let r = parse_reference_spec("uniform:-i:i", 2).unwrap();
        assert_eq!(r[1], uniform_marginal(-2.0, 2.0).unwrap());
        assert!(parse_reference_spec("gauss:1", 2).is_err());
        assert!(parse_reference_spec("uniform:1", 2).is_err());
    }
}
