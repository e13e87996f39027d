//! Discretized mirror-Langevin update rules on the envelope-smoothed
//! surrogate potential, and chain/replica execution.
//!
//! With mirror map `phi`, step size `gamma` and `grad U` the surrogate gradient:
//!
//! ```text
//! BMUMLA       x+ = grad phi*( grad phi(x) - gamma grad U(x) + sqrt(2 gamma) hess phi(x)^{1/2} xi )
//! BMUMLA dual  y+ = y - gamma grad U(grad phi*(y)) + sqrt(2 gamma) hess phi*(y)^{1/2} xi
//! BMMMLA       y0 = grad phi(x) - gamma grad U(x)
//!              y_{n+1} = y_n + sqrt(2 gamma / N) hess phi*(y_n)^{-1/2} xi_n,  n < N
//!              x+ = grad phi*(y_N)
//! ```
//!
//! MYULA (`phi = psi = |.|^2/2`), HRLMC (`g = 0`) and ULA (both) are
//! configurations of BMUMLA rather than separate rules.
//!
//! # Randomness
//!
//! Each chain owns a `ChaCha20Rng` seeded with `seed_from_u64(seed)`; normal
//! variates come from `rand_distr::StandardNormal` (ziggurat). A step draws
//! `d` normals in coordinate order (BMMMLA: `N` blocks of `d`). Replica `r`
//! uses seed `seed + r` (wrapping).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::legendre::LegendreMap;
use crate::potentials::SurrogatePotential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Bmumla,
    BmumlaDual,
    Bmmmla,
}

pub const DEFAULT_INNER_STEPS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub surrogate: SurrogatePotential,
    pub mirror: LegendreMap,
    pub variant: Variant,
    pub gamma: f64,
    pub inner_steps: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.surrogate.dim();
        check_dim(d, self.mirror.dim())?;
        check_dim(d, self.x0.len())?;
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {}",
                self.gamma
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        if self.variant == Variant::Bmmmla && self.inner_steps == 0 {
            return Err(Error::InvalidParameter("inner_steps must be at least 1".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial position must be finite".into()));
        }
        Ok(())
    }

    /// Number of rows a run retains: `ceil((iterations - burn_in) / thin)`.
    pub fn retained_rows(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }

    /// SHA-256 of the JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ChainConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Position, dual position and random stream of a running chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub position: Vec<f64>,
    /// Dual coordinate carried by the dual-space variant.
    pub dual: Option<Vec<f64>>,
    pub rng: ChaCha20Rng,
    pub step_index: usize,
}

impl ChainState {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        let dual = match cfg.variant {
            Variant::BmumlaDual => Some(cfg.mirror.grad(&cfg.x0)?),
            _ => None,
        };
        Ok(Self {
            position: cfg.x0.clone(),
            dual,
            rng: ChaCha20Rng::seed_from_u64(cfg.seed),
            step_index: 0,
        })
    }
}

/// Fills `out` with standard normal variates from `rng`.
pub fn fill_normals<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

fn diverged(step: usize, last: &[f64]) -> Error {
    Error::Divergence {
        step,
        last_finite: last.to_vec(),
    }
}

fn ensure_finite(v: &[f64], step: usize, last: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(diverged(step, last))
    }
}

/// One BMUMLA update from `x` with the given standard normal vector `xi`.
pub fn bmumla_update(cfg: &ChainConfig, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    bmumla_update_into(cfg, x, xi, &mut grad, &mut out)?;
    Ok(out)
}

fn bmumla_update_into(
    cfg: &ChainConfig,
    x: &[f64],
    xi: &[f64],
    grad: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    check_dim(x.len(), xi.len())?;
    cfg.surrogate.grad_into(x, grad)?;
    let noise = (2.0 * cfg.gamma).sqrt();
    let phi = &cfg.mirror;
    for i in 0..x.len() {
        let y = phi.grad_1d(i, x[i]) - cfg.gamma * grad[i]
            + noise * phi.hess_1d(i, x[i]).sqrt() * xi[i];
        out[i] = phi.conj_grad_1d(i, y)?;
    }
    Ok(())
}

/// One dual-space BMUMLA update of the dual coordinate `y`.
pub fn bmumla_dual_update(cfg: &ChainConfig, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    check_dim(y.len(), xi.len())?;
    let phi = &cfg.mirror;
    let x = phi.conj_grad(y)?;
    let mut grad = vec![0.0; y.len()];
    cfg.surrogate.grad_into(&x, &mut grad)?;
    let noise = (2.0 * cfg.gamma).sqrt();
    let mut out = vec![0.0; y.len()];
    for i in 0..y.len() {
        // hess phi*(y)^{1/2} is the reciprocal of hess phi*(y)^{-1/2}
        let sqrt_conj_hess = 1.0 / phi.conj_hess_inv_sqrt_1d(i, y[i])?;
        out[i] = y[i] - cfg.gamma * grad[i] + noise * sqrt_conj_hess * xi[i];
    }
    Ok(out)
}

/// One BMMMLA update; `xi` holds `inner_steps` consecutive blocks of `d`
/// normals.
pub fn bmmmla_update(cfg: &ChainConfig, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    let n = cfg.inner_steps.max(1);
    check_dim(n * d, xi.len())?;
    let phi = &cfg.mirror;
    let mut grad = vec![0.0; d];
    cfg.surrogate.grad_into(x, &mut grad)?;
    let mut y: Vec<f64> = (0..d)
        .map(|i| phi.grad_1d(i, x[i]) - cfg.gamma * grad[i])
        .collect();
    let scale = (2.0 * cfg.gamma / n as f64).sqrt();
    for block in xi.chunks(d) {
        for i in 0..d {
            y[i] += scale * phi.conj_hess_inv_sqrt_1d(i, y[i])? * block[i];
        }
    }
    phi.conj_grad(&y)
}

fn noise_len(cfg: &ChainConfig) -> usize {
    let d = cfg.surrogate.dim();
    match cfg.variant {
        Variant::Bmmmla => d * cfg.inner_steps.max(1),
        _ => d,
    }
}

fn advance(cfg: &ChainConfig, mut state: ChainState, xi: &[f64]) -> Result<ChainState> {
    let step = state.step_index + 1;
    let guard = |r: Result<Vec<f64>>, last: &[f64]| -> Result<Vec<f64>> {
        match r {
            Ok(v) => {
                ensure_finite(&v, step, last)?;
                Ok(v)
            }
            Err(Error::Domain(_)) => Err(diverged(step, last)),
            Err(e) => Err(e),
        }
    };
    match cfg.variant {
        Variant::Bmumla => {
            state.position = guard(bmumla_update(cfg, &state.position, xi), &state.position)?;
        }
        Variant::BmumlaDual => {
            let y = match state.dual.take() {
                Some(y) => y,
                None => cfg.mirror.grad(&state.position)?,
            };
            let next = guard(bmumla_dual_update(cfg, &y, xi), &state.position)?;
            let x = guard(cfg.mirror.conj_grad(&next), &state.position)?;
            state.dual = Some(next);
            state.position = x;
        }
        Variant::Bmmmla => {
            state.position = guard(bmmmla_update(cfg, &state.position, xi), &state.position)?;
        }
    }
    state.step_index = step;
    Ok(state)
}

/// One step of the configured variant, drawing its noise from the chain's
/// stream.
pub fn step(cfg: &ChainConfig, mut state: ChainState) -> Result<ChainState> {
    let mut xi = vec![0.0; noise_len(cfg)];
    fill_normals(&mut state.rng, &mut xi);
    advance(cfg, state, &xi)
}

pub fn bmumla_step(cfg: &ChainConfig, state: ChainState) -> Result<ChainState> {
    step_as(cfg, Variant::Bmumla, state)
}

pub fn bmumla_dual_step(cfg: &ChainConfig, state: ChainState) -> Result<ChainState> {
    step_as(cfg, Variant::BmumlaDual, state)
}

pub fn bmmmla_step(cfg: &ChainConfig, state: ChainState) -> Result<ChainState> {
    step_as(cfg, Variant::Bmmmla, state)
}

fn step_as(cfg: &ChainConfig, variant: Variant, state: ChainState) -> Result<ChainState> {
    if cfg.variant == variant {
        step(cfg, state)
    } else {
        let cfg = ChainConfig {
            variant,
            ..cfg.clone()
        };
        step(&cfg, state)
    }
}

/// Provenance attached to a batch. Timestamps are seconds since the epoch and
/// do not take part in batch equality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchMeta {
    pub config_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// Retained samples, row-major: one row per retained iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBatch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub meta: BatchMeta,
}

impl PartialEq for SampleBatch {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.meta.config_hash == other.meta.config_hash
            && self.meta.seed == other.meta.seed
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl SampleBatch {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self {
            rows,
            cols,
            data,
            meta: BatchMeta {
                config_hash: String::new(),
                seed: 0,
                started_unix: 0,
                finished_unix: 0,
            },
        })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }
}

/// Magic bytes opening a binary sample file.
pub const BINARY_MAGIC: [u8; 8] = *b"BPLMCF64";

impl SampleBatch {
    /// CSV with header `dim_1,...,dim_d`. Values use the shortest decimal
    /// representation that round-trips, so reading back is lossless.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((1..=self.cols).map(|j| format!("dim_{j}")))?;
        for r in 0..self.rows {
            w.write_record(self.row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let cols = rdr.headers()?.len();
        if cols == 0 {
            return Err(Error::Format(format!("{} has no header", path.display())));
        }
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != cols {
                return Err(Error::Format(format!(
                    "expected {cols} columns, found {}",
                    rec.len()
                )));
            }
            for field in rec.iter() {
                data.push(
                    field
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("not a number: {field:?}")))?,
                );
            }
        }
        if data.is_empty() {
            return Err(Error::Format(format!("{} holds no samples", path.display())));
        }
        Self::from_rows(data.len() / cols, cols, data)
    }

    /// Binary layout: 8 magic bytes, `u32` rows, `u32` cols (little endian),
    /// then `rows * cols` little-endian `f64` in row-major order.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let rows = u32::try_from(self.rows)
            .map_err(|_| Error::Format("too many rows for the binary format".into()))?;
        let cols = u32::try_from(self.cols)
            .map_err(|_| Error::Format("too many columns for the binary format".into()))?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 16 || bytes[..8] != BINARY_MAGIC {
            return Err(Error::Format(format!(
                "{} is not a binary sample file",
                path.display()
            )));
        }
        let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() != rows * cols * 8 {
            return Err(Error::Format(format!(
                "header announces {rows}x{cols} values but the body holds {} bytes",
                body.len()
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Format(format!("{} holds no samples", path.display())));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_rows(rows, cols, data)
    }

    /// Reads either format, detected from the leading magic bytes.
    pub fn read(path: &Path) -> Result<Self> {
        let mut head = [0u8; 8];
        let n = File::open(path)?.read(&mut head)?;
        if n == 8 && head == BINARY_MAGIC {
            Self::read_binary(path)
        } else {
            Self::read_csv(path)
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs `iterations` steps and keeps every `thin`-th position after burn-in.
pub fn run_chain(cfg: &ChainConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let started = unix_now();
    let d = cfg.surrogate.dim();
    let rows = cfg.retained_rows();
    let mut data = Vec::with_capacity(rows * d);
    let mut state = ChainState::new(cfg)?;
    let mut xi = vec![0.0; noise_len(cfg)];
    let mut grad = vec![0.0; d];
    let mut next = vec![0.0; d];
    for k in 1..=cfg.iterations {
        fill_normals(&mut state.rng, &mut xi);
        if cfg.variant == Variant::Bmumla {
            // allocation-free path for the common variant
            match bmumla_update_into(cfg, &state.position, &xi, &mut grad, &mut next) {
                Ok(()) => ensure_finite(&next, k, &state.position)?,
                Err(Error::Domain(_)) => return Err(diverged(k, &state.position)),
                Err(e) => return Err(e),
            }
            std::mem::swap(&mut state.position, &mut next);
            state.step_index = k;
        } else {
            state = advance(cfg, state, &xi)?;
        }
        if k > cfg.burn_in && (k - cfg.burn_in - 1).is_multiple_of(cfg.thin) {
            data.extend_from_slice(&state.position);
        }
    }
    Ok(SampleBatch {
        rows,
        cols: d,
        data,
        meta: BatchMeta {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            started_unix: started,
            finished_unix: unix_now(),
        },
    })
}

/// Independent replicas with seeds `seed + r`, run in parallel. Output is
/// identical to running them one after another.
pub fn run_replicas(cfg: &ChainConfig, replicas: usize) -> Result<Vec<SampleBatch>> {
    run_replicas_with_threads(cfg, replicas, None)
}

/// [`run_replicas`] on a pool capped at `threads` workers.
pub fn run_replicas_with_threads(
    cfg: &ChainConfig,
    replicas: usize,
    threads: Option<usize>,
) -> Result<Vec<SampleBatch>> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be at least 1".into()));
    }
    cfg.validate()?;
    let run = || -> Result<Vec<SampleBatch>> {
        (0..replicas)
            .into_par_iter()
            .map(|r| run_chain(&cfg.with_seed(cfg.seed.wrapping_add(r as u64))))
            .collect()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}
