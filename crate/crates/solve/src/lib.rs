//! File formats, the training driver and the `residual-solve` command line
//! for [`residual_core`].
//!
//! * [`formats`]: instances, configs, checkpoints, metrics, manifests and reports.
//! * [`commands`]: one function per subcommand, usable without the CLI.
//! * [`cli`]: argument parsing and exit codes.

pub mod cli;
pub mod commands;
mod error;
pub mod formats;

pub use error::{Result, SolveError};
