//! Experiment runner and command-line bindings for `emoxling-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod runner;
pub mod table;

pub use config::{Approach, ExperimentConfig, ModelKind};
pub use error::CliError;
pub use manifest::Manifest;
pub use runner::{run_experiment, RunOutcome};
pub use table::emit_result_table;
