//! Multivariate moment sequences, atomic measures, and the diagonal
//! operators that act on them.
//!
//! Everything works on explicit truncation windows (all multi-indices of
//! total degree ≤ D) in one of two scalar modes: exact arbitrary-precision
//! rationals or f64. Finite-level positivity checks are necessary evidence
//! only and say so; refutations carry witnesses that re-evaluate.

pub mod algebra;
pub mod combinatorics;
pub mod diagop;
pub mod dualmap;
pub mod error;
pub mod json;
pub mod levy;
pub mod positivity;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Mode, Scalar};
