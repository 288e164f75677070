//! Config ingestion, commands and result files behind the `fidgap` binary.

pub mod commands;
pub mod config;
pub mod demos;
pub mod output;

pub use commands::{fidelity, gap, sweep, validate, FidelityRun, RunOptions, SweepRow};
pub use config::ModelConfig;
pub use output::ResultEnvelope;
