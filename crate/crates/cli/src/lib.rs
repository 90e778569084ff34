//! Command-line front end for `hellinger-ucb`: experiment runner, bound
//! tables, ranking benchmark and numerical self-checks.
//!
//! The binary is a thin wrapper around [`run`]; everything is exposed here so
//! that tests can drive commands in-process.

pub mod args;
pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod selfcheck;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, Result};
