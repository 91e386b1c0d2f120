//! Command-line front end: configuration, subcommands and CSV output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Command, Outcome};
pub use config::{parse_config, parse_config_with_provenance, serialize, serialize_experiment, ConfigError, RunConfig};
