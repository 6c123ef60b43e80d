//! File formats and the `dspass` command line on top of `dspass-core`.

pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod io;

pub use error::{CliError, FormatError};
