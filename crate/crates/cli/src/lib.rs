//! Command-line front end: configuration resolution and the `simulate`,
//! `sweep` and `verify` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use config::{resolve, Overrides, Preset, RunConfig};
pub use error::CliError;
