//! Library side of the `lrr` command: configuration, subcommands and record I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod records;
