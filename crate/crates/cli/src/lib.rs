//! Batch front end for `kinetic-core`: configuration, run orchestration and
//! CSV export.

pub mod app;
pub mod config;

pub use app::{check_stability, config_hash, describe, run, CliError, RunSummary, StepRecord};
pub use config::{keys_help, parse_config, Config, ConfigError, ScenarioKind};
