//! Ground state energy estimators.
//!
//! [`basic_gsee`] is the ternary bisection with threshold circuits;
//! [`adv_gsee`] refines a coarse bisection estimate by averaging samples of
//! `p * nu` drawn on a Gaussian window around it.

mod adv;
mod basic;
mod bounds;
mod schedule;
mod sweep;

pub use adv::{adv_gsee, run_adv_trial, separation_margin, SeparationCheck};
pub use basic::{basic_gsee, basic_threshold_eps, BasicTrace, BisectionState, RoundRecord};
pub use bounds::{
    basic_round_budget, basic_trials_per_round, chernoff_threshold, hoeffding_rounds, hoeffding_tail, kl_bernoulli,
    kl_lower_bound, ThresholdScaling,
};
pub use schedule::{make_schedule, Branch, GseeSchedule, Refinement};
pub use sweep::{interpolation_gap, interpolation_sweep, SweepRow};

use crate::oracle::{CostReport, OracleError};
use crate::rejection::RejectionError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GseeError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("no accepted samples in {trials} trials (mean acceptance {mean_accept:e})")]
    NoAcceptedSamples { trials: u64, mean_accept: f64 },
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("rejection sampler failure: {0}")]
    Rejection(#[from] RejectionError),
}

/// Output of either estimator.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub estimate: f64,
    /// Accepted refinement samples (zero for the bisection branch).
    pub accepted_samples: u64,
    /// Refinement circuits run (zero for the bisection branch).
    pub refinement_trials: u64,
    pub cost: CostReport,
    pub schedule: Option<GseeSchedule>,
    pub coarse: Option<BasicTrace>,
    pub coarse_estimate: Option<f64>,
    pub window: Option<(f64, f64)>,
    /// Mean acceptance probability on the refinement window.
    pub mean_accept: Option<f64>,
}
