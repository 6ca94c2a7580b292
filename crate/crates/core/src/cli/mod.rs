//! Command dispatch for the `trilevel` binary.

mod config;
mod run;

pub use config::{parse_config, ConfigError, RunConfig, DEFAULT_SWEEP};
pub use run::{run, CheckRecord, CliError, Command, ReportSummary, RunOutcome};
