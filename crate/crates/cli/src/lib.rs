//! File handling, report layout and subcommands behind the `pptest` binary.

pub mod args;
pub mod commands;
pub mod data;
pub mod hypothesis;
pub mod report;
pub mod scenarios;

pub use commands::{run, CliError};
