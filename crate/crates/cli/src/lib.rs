//! Command-line front end for `epsopt-core`: bounds, exact sample sizes,
//! reference tables, covariate allocation and Monte Carlo checks.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod format;
pub mod tables;

pub use commands::{run, Io};
pub use error::{CliError, CliResult};
