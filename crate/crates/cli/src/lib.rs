//! Experiment harness for `muonkit`: TOML configs, parallel Monte Carlo
//! replicas, CSV traces, JSON bound reports, rate sweeps and the
//! verification suite.
//!
//! The `muonkit` binary is a thin wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{bounds_report, run_experiment, Experiment, ExperimentReport};
