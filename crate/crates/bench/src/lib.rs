//! Batch experiments for the slender-channel preconditioners, written as CSV
//! with a JSON sidecar.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{BackendChoice, Experiment, ExperimentConfig, RawConfig};
pub use experiments::{run, ConvergenceRow, ResultRow, Table};
