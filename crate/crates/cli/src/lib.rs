//! Configuration, orchestration and output for the `odetype` command.

// NaN inputs must fail range checks, so `!(x > 0)` is written on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod selftest;
pub mod tools;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
