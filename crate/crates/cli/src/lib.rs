//! Experiment harness for `nls-core`: configuration, subcommands and output files.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::CliError;
