//! Scenario parsing and command implementations for the `consensus`
//! binary.

pub mod commands;
pub mod error;
pub mod scenario;
pub mod verify;

pub use error::{CliError, CliResult, Exit};
