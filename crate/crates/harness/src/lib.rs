//! Monte Carlo harness for long-memory OAMP: configuration, parallel trials,
//! state-evolution predictions, CSV reports and a command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod selftest;

pub use config::{ExperimentConfig, Variant};
pub use error::HarnessError;
pub use experiment::{run_experiment, ExperimentReport, ReportRow, VariantSummary};
