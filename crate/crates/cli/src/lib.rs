//! Experiment harness for Byzantine-robust distributed gradient descent:
//! configuration files, sweeps, rate fits, CSV output and the built-in
//! verification suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
mod error;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use error::{HarnessError, Result};
