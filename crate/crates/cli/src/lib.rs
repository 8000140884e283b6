//! Command-line front end: text formats and subcommands.

pub mod commands;
pub mod format;
