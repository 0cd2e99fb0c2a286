//! Configuration, experiment dispatch and report output for the `plapwave`
//! command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{
    load_config, parse_config, parse_config_str, Experiment, ExperimentList, RunConfig, Validation,
};
pub use error::CliError;
pub use experiments::{run_experiment, Audit, ExperimentReport, RunReport, SCHEMA_VERSION};
pub use report::{emit_report, Manifest};
