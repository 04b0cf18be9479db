//! Batch driver for lamepert convergence experiments: JSON configs in,
//! CSV/JSON reports out.

pub mod config;
pub mod error;
pub mod run;

pub use error::{CliError, Result};
