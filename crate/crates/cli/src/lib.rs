//! Experiment driver around the rotconv solver crate: configuration parsing
//! with dotted-path overrides, run orchestration, and output management.

pub mod config;
pub mod experiments;
pub mod manifest;

pub use config::{parse_config, ExperimentKind, RunConfig};
pub use experiments::{run, RunError, RunSummary};
