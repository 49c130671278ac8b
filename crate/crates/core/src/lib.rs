//! Spectral-level simulation of rejection-sampling ground state energy
//! estimation: approximants, acceptance oracles, the bisection and refined
//! estimators, certification and an experiment harness.

// `!(x <= tol)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod gsee;
pub mod harness;
pub mod lemmas;
pub mod oracle;
pub mod polyapprox;
pub mod quadrature;
pub mod rejection;
pub mod rng;
pub mod scalar;
pub mod spectrum;
pub mod stats;

/// Chebyshev series over `f64`.
pub type Chebyshev = polyapprox::ChebyshevSeries<f64>;
