//! Command-line front end for `ks1d`: single runs, `(p, mass)` sweeps and
//! identity verification.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
