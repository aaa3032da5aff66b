//! Files, threads and the command line around `fedgraph-core`.

pub mod cli;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod formats;

pub use error::{Blame, CliError, Result};
pub use exec::Pool;
