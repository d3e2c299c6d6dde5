//! Elliptic theta functions, Belavin's R-matrix, factorized difference L-operators,
//! fusion, and the commuting elliptic Macdonald-Ruijsenaars operators they generate.
//!
//! Every identity is exposed as a residual-returning check so that the `verify`
//! binary and the test-suite can drive them at generic parameters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belavin;
pub mod config;
pub mod context;
pub mod error;
pub mod jet;
pub mod opalg;
pub mod linalg;
pub mod report;
pub mod suites;
pub mod theta;
pub mod theta_space;
pub mod transfer;
pub mod weight;

pub use context::{Context, C64};
pub use error::{Error, Result};
pub use weight::{ShiftKey, WeightPoint};
