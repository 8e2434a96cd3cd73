//! Batch runner for the `xxz-core` experiments: TOML configs in, CSV tables, gnuplot data
//! files and a JSON manifest out.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use report::{emit_report, Report};
pub use runner::{run_experiment, RunManifest};
