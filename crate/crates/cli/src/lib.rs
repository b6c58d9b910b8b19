//! Command-line front end for `varpro_trend`: CSV ingestion, run
//! configuration, and the files written by each subcommand.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

pub use error::{CliError, Result};
