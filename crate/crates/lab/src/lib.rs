//! Experiment drivers, configuration and reports for the khessian
//! laboratory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod report;
pub mod sampler;

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind};
pub use error::{LabError, Result};
pub use experiments::{criterion_line, run_experiment, verify_all};
pub use report::{write_report, Check, Report, Table};
