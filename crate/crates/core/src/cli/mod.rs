//! Scenario files, result writers and the subcommand pipelines.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_compare, cmd_simulate, cmd_solve, cmd_sweep, parse_values, Overrides, RunReport};
pub use config::ScenarioConfig;
pub use output::fmt_num;
