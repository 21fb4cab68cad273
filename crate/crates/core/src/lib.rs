//! Exact joint distributions of restricted prime-factor counts over a
//! partition of the primes, together with the analytic predictors they
//! converge to: the Poisson product, the Selberg sum asymptotic, the
//! biased main-term formula, and Halász-type distance diagnostics.
//!
//! The census side is exact integer combinatorics (segmented sieve plus a
//! trial-division oracle); the analytic side is double precision with
//! compensated summation and explicit truncation tail bounds.

pub mod analytic;
pub mod census;
pub mod error;
pub mod halasz;
pub mod numerics;
pub mod partitions;
pub mod primes;
pub mod report;
pub mod transform;

pub use error::{Error, Result};
