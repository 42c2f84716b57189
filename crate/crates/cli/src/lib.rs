//! Command-line front end for `manifold-boundary`: CSV/JSON I/O, the
//! `generate`, `test`, `select-k`, `experiment` and `flag-boundary`
//! subcommands, and the Monte Carlo harness behind `experiment`.
//!
//! Exit status: 0 when the command ran (whatever the test decided), 2 for
//! input or configuration errors, 3 for numerical failures.

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;

pub use error::CliError;
