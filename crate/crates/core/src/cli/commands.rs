use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{parse_reference_spec, Experiment, ExperimentConfig, OutputFormat};
use super::suite::{run_suite, CheckOutcome, SuiteOptions};
use crate::diagnostics::{
    marginal_diagnostics, posterior_mean_error, write_diagnostics_csv, write_error_curves_csv,
};
use crate::error::{Error, Result};
use crate::samplers::{run_replicas_with_threads, SampleBatch};

/// Environment variable capping the number of replica worker threads.
pub const THREADS_ENV: &str = "BPLMC_THREADS";

pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config {
                field: THREADS_ENV.into(),
                message: format!("expected a positive integer, got {v:?}"),
            }),
        Err(_) => Ok(None),
    }
}

/// Everything needed to reproduce a run directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub tool_version: String,
    /// Fully explicit configuration; feeding it back to `sample` reproduces
    /// the sample files bit for bit.
    pub config: ExperimentConfig,
    pub chain_config_sha256: String,
    pub replica_seeds: Vec<u64>,
    pub files: Vec<String>,
    pub rng: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug)]
pub struct SampleOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub batches: Vec<SampleBatch>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Reads a config, applies command-line overrides and resolves it.
pub fn load_experiment(
    config_path: &Path,
    output_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<Experiment> {
    let mut cfg = ExperimentConfig::from_path(config_path)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = Some(dir.to_path_buf());
    }
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    cfg.resolve()
}

/// Runs an experiment and writes samples, diagnostics and the manifest.
pub fn run_experiment(exp: &Experiment) -> Result<SampleOutcome> {
    let started = unix_now();
    let batches = run_replicas_with_threads(&exp.chain, exp.replicas, thread_cap()?)?;
    let dir = &exp.output_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (r, b) in batches.iter().enumerate() {
        let stem = format!("samples_r{r:03}");
        if matches!(exp.output_format, OutputFormat::Csv | OutputFormat::Both) {
            let p = dir.join(format!("{stem}.csv"));
            b.write_csv(&p)?;
            files.push(p);
        }
        if matches!(exp.output_format, OutputFormat::Binary | OutputFormat::Both) {
            let p = dir.join(format!("{stem}.bin"));
            b.write_binary(&p)?;
            files.push(p);
        }
    }
    if let Some(refs) = &exp.references {
        let pooled = pool(&batches)?;
        let rows = marginal_diagnostics(&pooled, refs)?;
        let p = dir.join("diagnostics.csv");
        write_diagnostics_csv(&p, &rows)?;
        files.push(p);
    }
    if let Some(star) = &exp.theta_star {
        let curves = posterior_mean_error(&batches, star)?;
        let tracked: Vec<usize> = (0..star.len()).collect();
        let p = dir.join("error_curves.csv");
        write_error_curves_csv(&p, &curves, &tracked)?;
        files.push(p);
    }
    let manifest = Manifest {
        name: exp.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: exp.resolved.clone(),
        chain_config_sha256: exp.chain.hash(),
        replica_seeds: (0..exp.replicas as u64)
            .map(|r| exp.chain.seed.wrapping_add(r))
            .collect(),
        files: files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        rng: "ChaCha20Rng::seed_from_u64(seed + replica); StandardNormal (ziggurat)".into(),
        started_unix: started,
        finished_unix: unix_now(),
    };
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_string_pretty(&manifest)?)?;
    files.push(p);
    Ok(SampleOutcome {
        output_dir: dir.clone(),
        files,
        batches,
    })
}

/// Stacks the rows of all replicas into one batch.
fn pool(batches: &[SampleBatch]) -> Result<SampleBatch> {
    let cols = batches[0].cols;
    let mut data = Vec::new();
    for b in batches {
        if b.cols != cols {
            return Err(Error::Shape("replicas differ in dimension".into()));
        }
        data.extend_from_slice(&b.data);
    }
    SampleBatch::from_rows(data.len() / cols, cols, data)
}

pub fn cmd_sample(config_path: &Path, output_dir: Option<&Path>, seed: Option<u64>) -> Result<SampleOutcome> {
    let exp = load_experiment(config_path, output_dir, seed)?;
    run_experiment(&exp)
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyOutcome {
    /// True when every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = match (c.passed, c.gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "INFO",
            };
            s.push_str(&format!(
                "{status} {:<36} metric={:<12.4e} threshold={:<10.1e} {}\n",
                c.name, c.metric, c.threshold, c.detail
            ));
        }
        let gating: Vec<_> = self.checks.iter().filter(|c| c.gating).collect();
        let failed = gating.iter().filter(|c| !c.passed).count();
        s.push_str(&format!(
            "{} of {} gating checks passed; {} informational\n",
            gating.len() - failed,
            gating.len(),
            self.checks.len() - gating.len()
        ));
        s
    }

    /// Columns: `check,metric,threshold,passed,gating`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["check", "metric", "threshold", "passed", "gating"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.metric.to_string(),
                c.threshold.to_string(),
                c.passed.to_string(),
                c.gating.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn cmd_verify(filter: Option<&str>, report: Option<&Path>, opts: SuiteOptions) -> Result<VerifyOutcome> {
    let out = VerifyOutcome {
        checks: run_suite(filter, opts)?,
    };
    if out.checks.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no check matches filter {:?}",
            filter.unwrap_or("")
        )));
    }
    if let Some(p) = report {
        out.write_csv(p)?;
    }
    Ok(out)
}

/// Computes per-coordinate diagnostics of a sample file against reference
/// marginals and writes `diagnostics.csv` into `output_dir`.
pub fn cmd_diag(samples: &Path, reference_spec: &str, output_dir: &Path) -> Result<PathBuf> {
    let batch = SampleBatch::read(samples)?;
    let refs = parse_reference_spec(reference_spec, batch.cols)?;
    let rows = marginal_diagnostics(&batch, &refs)?;
    fs::create_dir_all(output_dir)?;
    let p = output_dir.join("diagnostics.csv");
    write_diagnostics_csv(&p, &rows)?;
    Ok(p)
}

/// Writes `text` to stdout, ignoring a closed pipe.
pub fn print(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}
