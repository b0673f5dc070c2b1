//! Configuration loading and the command implementations behind the `twopatch` binary.

pub mod commands;
pub mod config;

pub use commands::{Outcome, EXIT_FAILURE, EXIT_OK, EXIT_UNCERTIFIED};
pub use config::RunConfig;
