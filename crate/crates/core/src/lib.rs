//! Solvers and asymptotic analysis for linear discrete convolution
//! equations with periodically modulated, slowly decaying kernels.
//!
//! The crate computes resolvents and forced solutions of
//! `X(n+1) = f(n+1) + (U*X)(n)`, classifies kernels and weights in
//! periodic-decay classes, predicts the stride limits of solutions through
//! a block-Toeplitz lifting and an admissibility limit formula, and
//! reproduces the second-order memory analysis of ARCH(infinity) models
//! whose autocovariance is not proportional to the coefficient sequence.

// index-based loops over flat matrix storage are the dominant idiom here
#![allow(clippy::needless_range_loop)]

pub mod arch;
pub mod asymptotics;
pub mod cert;
pub mod error;
pub mod lift;
pub mod matseq;
pub mod synth;
pub mod volterra;
pub mod weights;

pub use error::{Error, Result};
pub use matseq::MatSeq;

use serde::{Deserialize, Serialize};

/// Three-valued outcome for checks on genuine limits and strict
/// inequalities over infinite sums: a finite computation can refute,
/// certify, or fail to decide them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}
