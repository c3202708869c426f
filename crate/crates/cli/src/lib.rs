//! Scenario runner and verification harness for `calabi-core`.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod run;
pub mod scenario;
pub mod table;
pub mod tasks;
pub mod verify;

pub use error::{CliError, CliResult};
