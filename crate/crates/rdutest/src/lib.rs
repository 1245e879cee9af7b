//! Nonparametric consistency tests for stochastic choice between lotteries.
//!
//! Given per-menu choice frequencies, the library tests whether a population
//! of expected-utility (EU) or rank-dependent-expected-utility (RDEU)
//! maximizers could have generated them: it enumerates the linear orders on
//! the lottery universe that each model admits, assembles the 0/1 matrix B of
//! the deterministic choice rules those orders induce, and measures the
//! distance from the observed frequencies to the cone {Bv : v ≥ 0} by
//! nonnegative least squares. Inference uses a tightened-cone bootstrap.

pub mod builtin;
pub mod choices;
pub mod cone;
pub mod config;
pub mod error;
mod lp;
pub mod model;
pub mod nnls;
pub mod oracle;
pub mod orders;
pub mod report;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
