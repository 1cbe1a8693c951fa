//! Byzantine-robust distributed gradient descent.
//!
//! The crate is `no_std` (with `alloc`) and holds the pure algorithmic
//! parts: coordinate-wise robust aggregation, statistical calculators and
//! Monte Carlo verifiers, loss models, synthetic data generation, Byzantine
//! behaviours and the synchronous master-worker simulator. File formats,
//! configuration, parallel sweeps and the command-line tool live in the
//! `robustgd` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;

pub mod adversary;
pub mod aggregation;
pub mod data;
pub mod linalg;
pub mod losses;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod vector;

pub use error::{Error, Result};
