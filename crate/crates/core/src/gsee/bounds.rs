//! Closed-form sample counts and thresholds.

use super::GseeError;
use serde::{Deserialize, Serialize};

/// Power of the normalization `c` in the bisection threshold and round size.
///
/// A `(c, m, 0)` encoding succeeds with probability `c^-2 <g(H)^2>`, so
/// [`ThresholdScaling::Squared`] compares counts against `0.5 c^-2 eta M` with
/// `M = ceil(12 c^2 eta^-1 ln(L / delta))`. [`ThresholdScaling::AsWritten`]
/// keeps the single power of `c` of the published pseudocode; the two agree
/// for `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdScaling {
    #[default]
    Squared,
    AsWritten,
}

impl ThresholdScaling {
    pub fn factor(self, c: f64) -> f64 {
        match self {
            ThresholdScaling::Squared => c * c,
            ThresholdScaling::AsWritten => c,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), GseeError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GseeError::InvalidParameters(format!("{name} must be positive, got {v}")))
    }
}

fn probability(name: &str, v: f64) -> Result<(), GseeError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(GseeError::InvalidParameters(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Number of accepted samples `K` with `2 exp(-eps^2 K / (8 w^2)) <= delta / 3`,
/// i.e. `ceil(8 w^2 eps^-2 ln(6 / delta))`, at least one.
pub fn hoeffding_rounds(eps: f64, w: f64, delta: f64) -> Result<u64, GseeError> {
    positive("eps", eps)?;
    positive("w", w)?;
    probability("delta", delta)?;
    Ok((8.0 * w * w * (6.0 / delta).ln() / (eps * eps)).ceil().max(1.0) as u64)
}

/// Two-sided Hoeffding tail for the mean of `k` samples of range `2w`
/// deviating by `eps / 2`.
pub fn hoeffding_tail(eps: f64, w: f64, k: f64) -> f64 {
    2.0 * (-eps * eps * k / (8.0 * w * w)).exp()
}

/// Success-count threshold `0.5 eta M / c^p` of one bisection round.
pub fn chernoff_threshold(c: f64, eta: f64, m: u64, scaling: ThresholdScaling) -> Result<f64, GseeError> {
    positive("c", c)?;
    positive("eta", eta)?;
    Ok(0.5 * eta * m as f64 / scaling.factor(c))
}

/// Round budget `L = ceil(log_{3/2}(1/eps))`, at least one.
pub fn basic_round_budget(eps: f64) -> Result<u32, GseeError> {
    positive("eps", eps)?;
    Ok(((1.0 / eps).ln() / 1.5f64.ln()).ceil().max(1.0) as u32)
}

/// Circuits per bisection round, `ceil(12 c^p eta^-1 ln(L / delta))`.
pub fn basic_trials_per_round(
    c: f64,
    eta: f64,
    budget: u32,
    delta: f64,
    scaling: ThresholdScaling,
) -> Result<u64, GseeError> {
    positive("c", c)?;
    positive("eta", eta)?;
    probability("delta", delta)?;
    Ok((12.0 * scaling.factor(c) / eta * (budget as f64 / delta).ln()).ceil() as u64)
}

/// Bernoulli relative entropy `D(x || y)`.
pub fn kl_bernoulli(x: f64, y: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(x, y) + term(1.0 - x, 1.0 - y)
}

/// `(x - y)^2 / (2 max(x, y))`, a lower bound on [`kl_bernoulli`].
pub fn kl_lower_bound(x: f64, y: f64) -> f64 {
    (x - y) * (x - y) / (2.0 * x.max(y))
}
