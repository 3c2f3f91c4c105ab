//! Configuration, snapshots and the command-line subcommands.

pub mod commands;
pub mod config;
pub mod snapshot;

pub use commands::Report;
pub use config::RunConfig;
