//! Experiment runner for genealab.
//!
//! An experiment is a TOML file with a seed, a tolerance policy and one
//! table of parameters for the chosen subcommand. [`run`] validates the
//! file, writes the fully resolved configuration next to the results and
//! runs the experiment on a worker pool; the report depends only on the
//! configuration and the seed.

pub mod config;
pub mod error;
pub mod runner;

pub use config::{ExperimentFile, Kind, Overrides};
pub use error::{CliError, Result};
pub use runner::{exit_code, run, worker_count, RunResult, WORKERS_ENV};
