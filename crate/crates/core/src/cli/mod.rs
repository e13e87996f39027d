//! Experiment runner, verification entry point and diagnostics computer.

pub mod commands;
pub mod config;
pub mod expr;
pub mod suite;

pub use commands::{cmd_diag, cmd_sample, cmd_verify, run_experiment, THREADS_ENV};
pub use config::{ExperimentConfig, Preset};
