use super::basic::cost_since;
use super::{basic_gsee, Branch, EstimateResult, GseeError, GseeSchedule, ThresholdScaling};
use crate::oracle::{AcceptanceOracle, OracleConfig};
use crate::rejection::{run_window_trials, NuParams, Proposal, WindowProfile};
use crate::rng;
use crate::spectrum::SpectralMeasure;
use serde::Serialize;

/// Refined estimator.
///
/// With `eps >= gap/8` this is [`basic_gsee`]. Otherwise a coarse bisection to
/// `w/2` (failure `delta/3`) centres a window `[E - w, E + w]`; `M` circuits
/// with uniformly drawn Gaussian centres are run there and the estimate is the
/// mean of the accepted centres. `threshold_oracle` serves the bisection and
/// `gaussian_oracle` the refinement.
pub fn adv_gsee(
    schedule: &GseeSchedule,
    threshold_oracle: &mut AcceptanceOracle,
    gaussian_oracle: &mut AcceptanceOracle,
    spec: &SpectralMeasure,
    scaling: ThresholdScaling,
) -> Result<EstimateResult, GseeError> {
    let refine = match (schedule.branch, schedule.refinement) {
        (Branch::Refine, Some(r)) => r,
        _ => {
            let mut res = basic_gsee(schedule.eps, schedule.delta, schedule.eta, threshold_oracle, spec, scaling)?;
            res.schedule = Some(*schedule);
            return Ok(res);
        }
    };
    let coarse = basic_gsee(refine.coarse_eps, refine.coarse_delta, schedule.eta, threshold_oracle, spec, scaling)?;
    let centre = coarse.estimate;
    let proposal = Proposal::uniform(centre - refine.w, centre + refine.w)?;
    let nu = NuParams::from_operator_width(refine.sigma, refine.eps2);
    let start = gaussian_oracle.run_report();
    let profile = WindowProfile::build(gaussian_oracle, spec, nu, proposal)?;
    let batch = run_window_trials(gaussian_oracle, &profile, refine.trials);
    if batch.accepted == 0 {
        return Err(GseeError::NoAcceptedSamples { trials: refine.trials, mean_accept: profile.mean_accept });
    }
    let refine_cost = cost_since(&start, &gaussian_oracle.run_report());
    Ok(EstimateResult {
        estimate: proposal.center() + batch.sum / batch.accepted as f64,
        accepted_samples: batch.accepted,
        refinement_trials: refine.trials,
        cost: coarse.cost.merge(&refine_cost),
        schedule: Some(*schedule),
        coarse: coarse.coarse,
        coarse_estimate: Some(centre),
        window: Some((proposal.a, proposal.b)),
        mean_accept: Some(profile.mean_accept),
    })
}

/// Runs one seeded trial with fresh oracles on the trial's own streams.
pub fn run_adv_trial(
    schedule: &GseeSchedule,
    spec: &SpectralMeasure,
    threshold_cfg: OracleConfig,
    gaussian_cfg: OracleConfig,
    master_seed: u64,
    trial: u64,
    scaling: ThresholdScaling,
) -> Result<EstimateResult, GseeError> {
    let mut t = AcceptanceOracle::new(threshold_cfg, rng::stream(master_seed, trial, rng::lane::THRESHOLD_ORACLE));
    let mut g = AcceptanceOracle::new(gaussian_cfg, rng::stream(master_seed, trial, rng::lane::GAUSSIAN_ORACLE));
    adv_gsee(schedule, &mut t, &mut g, spec, scaling)
}

/// Distance from the excited levels to the refinement window, against the
/// separation `sigma sqrt(ln(0.5 c2^2 / eps2))` the error analysis needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationCheck {
    /// `min_{j >= 1, xi in window} E_j - xi`.
    pub margin: f64,
    pub required: f64,
}

impl SeparationCheck {
    pub fn holds(&self) -> bool {
        self.margin >= self.required
    }
}

/// Reads the hidden spectrum; for tests and diagnostics only.
pub fn separation_margin(
    schedule: &GseeSchedule,
    spec: &SpectralMeasure,
    window: (f64, f64),
) -> Option<SeparationCheck> {
    let r = schedule.refinement?;
    let e1 = *spec.energies().get(1)?;
    Some(SeparationCheck {
        margin: e1 - window.1,
        required: r.sigma * (0.5 * schedule.c2 * schedule.c2 / r.eps2).ln().sqrt(),
    })
}
