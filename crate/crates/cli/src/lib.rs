//! Experiment driver: single solves, optimality-gap suites, MSE sweeps,
//! runtime benchmarks and toy federated-learning studies, each writing
//! plot-ready CSV files and a manifest into its own output directory.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod fl;
pub mod gap;
pub mod instances;
pub mod output;
pub mod sweep;

pub use commands::{run, Cli, Command};
pub use config::Config;
pub use error::CliError;
