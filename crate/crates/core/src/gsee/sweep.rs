use super::{make_schedule, run_adv_trial, Branch, GseeError, ThresholdScaling};
use crate::oracle::OracleConfig;
use crate::spectrum::SpectralMeasure;
use serde::Serialize;

/// Gap promise `eps^beta * gap_true^(1 - beta)` interpolating between the
/// accuracy (`beta = 1`) and the true gap (`beta = 0`).
pub fn interpolation_gap(beta: f64, eps: f64, gap_true: f64) -> f64 {
    eps.powf(beta) * gap_true.powf(1.0 - beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub gap: f64,
    pub branch: Branch,
    pub max_depth: u64,
    pub total_queries: u64,
    pub abs_error: f64,
}

/// One seeded estimator run per `beta`, with the gap promise from
/// [`interpolation_gap`] and the true gap of `spec`.
#[allow(clippy::too_many_arguments)]
pub fn interpolation_sweep(
    betas: &[f64],
    eps: f64,
    delta: f64,
    spec: &SpectralMeasure,
    threshold_cfg: OracleConfig,
    gaussian_cfg: OracleConfig,
    seed: u64,
    scaling: ThresholdScaling,
) -> Result<Vec<SweepRow>, GseeError> {
    let gap_true =
        spec.gap_true().ok_or_else(|| GseeError::InvalidParameters("sweep needs at least two levels".into()))?;
    betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let gap = interpolation_gap(beta, eps, gap_true);
            let s = make_schedule(
                eps,
                delta,
                gap,
                spec.overlap0(),
                threshold_cfg.c,
                threshold_cfg.m,
                gaussian_cfg.c,
                gaussian_cfg.m,
            )?;
            let r = run_adv_trial(&s, spec, threshold_cfg, gaussian_cfg, seed, i as u64, scaling)?;
            Ok(SweepRow {
                beta,
                gap,
                branch: s.branch,
                max_depth: r.cost.max_depth,
                total_queries: r.cost.queries_total,
                abs_error: (r.estimate - spec.ground_energy()).abs(),
            })
        })
        .collect()
}
