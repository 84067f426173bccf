//! Experiment harness for the learned learning-rate controller: configs,
//! seeded runs, baseline sweeps, CSV and SVG output, and the `aclr` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod plot;

pub use cli::cli_main;
pub use config::{ExperimentConfig, Method, TaskSpec};
pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep_baselines, RunArtifacts, SweepReport};
