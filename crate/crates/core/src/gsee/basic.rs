use super::{
    basic_round_budget, basic_trials_per_round, chernoff_threshold, EstimateResult, GseeError, ThresholdScaling,
};
use crate::oracle::{AcceptanceOracle, CostReport, OperatorFunction};
use crate::spectrum::SpectralMeasure;
use serde::Serialize;

/// Threshold accuracy `eps' = min(sqrt(0.1 eta), 0.05)`.
pub fn basic_threshold_eps(eta: f64) -> f64 {
    (0.1 * eta).sqrt().min(0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionState {
    pub l: f64,
    pub r: f64,
    pub budget: u32,
    pub m_per_round: u64,
    pub eps_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub l: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub successes: u64,
    pub threshold: f64,
    /// True when the count fell below the threshold and `l` moved up to `a`.
    pub raised_lower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicTrace {
    pub initial: BisectionState,
    pub rounds: Vec<RoundRecord>,
    pub estimate: f64,
}

/// Ternary bisection for `E_0` to accuracy `eps` with failure probability `delta`.
///
/// Each round runs `M` threshold circuits for the band `[a, b]` (the middle
/// third of the bracket) and keeps `[a, r]` when the success count is below
/// `0.5 eta M / c^p`, `[l, b]` otherwise.
pub fn basic_gsee(
    eps: f64,
    delta: f64,
    eta: f64,
    oracle: &mut AcceptanceOracle,
    spec: &SpectralMeasure,
    scaling: ThresholdScaling,
) -> Result<EstimateResult, GseeError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(GseeError::InvalidParameters(format!("eta must lie in (0, 1], got {eta}")));
    }
    let start = oracle.run_report();
    let c = oracle.c();
    let budget = basic_round_budget(eps)?;
    let m = basic_trials_per_round(c, eta, budget, delta, scaling)?;
    let threshold = chernoff_threshold(c, eta, m, scaling)?;
    let eps_prime = basic_threshold_eps(eta);
    let dom = spec.model_domain().interval();
    let (mut l, mut r) = (dom.lo, dom.hi);
    let initial = BisectionState { l, r, budget, m_per_round: m, eps_prime };
    let mut rounds = Vec::new();
    while r - l > 2.0 * eps {
        let a = (2.0 * l + r) / 3.0;
        let b = (l + 2.0 * r) / 3.0;
        let k = oracle.sample_count(spec, OperatorFunction::Threshold { a, b, eps: eps_prime }, m)?;
        let raised_lower = (k as f64) < threshold;
        rounds.push(RoundRecord { l, r, a, b, successes: k, threshold, raised_lower });
        if raised_lower {
            l = a;
        } else {
            r = b;
        }
    }
    let estimate = 0.5 * (l + r);
    Ok(EstimateResult {
        estimate,
        accepted_samples: 0,
        refinement_trials: 0,
        cost: cost_since(&start, &oracle.run_report()),
        schedule: None,
        coarse: Some(BasicTrace { initial, rounds, estimate }),
        coarse_estimate: None,
        window: None,
        mean_accept: None,
    })
}

/// Counter increments between two snapshots; depth is the running maximum.
pub(super) fn cost_since(start: &CostReport, end: &CostReport) -> CostReport {
    CostReport {
        circuits: end.circuits - start.circuits,
        queries_total: end.queries_total - start.queries_total,
        max_depth: end.max_depth,
    }
}
