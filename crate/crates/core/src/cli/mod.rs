//! Experiment driver behind the `gbadmm` binary.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod presets;

pub use config::{load_config, parse_config, ExperimentKind, RunConfig, SolverChoice};
pub use experiments::{run, SummaryReport};
