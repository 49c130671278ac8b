//! Certification of a ground state energy estimate without gap knowledge.
//!
//! Samples of `p * n_sigma` are drawn by rejection on two windows around the
//! candidate `E`. Stage 1 estimates the mass on `[E + L/2, E + 2L]` and rejects
//! a distribution that is not peaked at `E`. Stage 2 conditions on
//! `[E - L, E + L]` and accepts iff the conditioned variance is within
//! `2 eps^2 eta` of `sigma^2`: pollution by excited levels that pulls the mean
//! away from `E_0` widens the peak (see [`mixture_variance_bound`]).

use crate::oracle::AcceptanceOracle;
use crate::quadrature::{self, QuadratureError};
use crate::rejection::{run_window_trials, run_window_until, NuParams, Proposal, RejectionError, WindowProfile};
use crate::spectrum::SpectralMeasure;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("promise violated: {0}")]
    PromiseViolationDetected(String),
    #[error("stage 2 needs about {expected:.3e} circuits, above the cap {cap}")]
    TrialCapExhausted { cap: u64, expected: f64 },
    #[error(transparent)]
    Rejection(#[from] RejectionError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertParams {
    pub eps: f64,
    pub eta: f64,
    /// Standard deviation of the sampled law `p * n_sigma`.
    pub sigma: f64,
    /// Candidate with `|E_hat - E_0| <= sigma` promised.
    pub e_hat: f64,
    pub delta: f64,
    /// `eps^2 eta / 160`.
    pub tau: f64,
    /// `sigma sqrt(8 ln(1/tau))`.
    pub l: f64,
    /// Peakedness constant: the tail threshold `eps^2 eta / 80` equals `c' eps^2 eta^2`.
    pub c_prime: f64,
    /// Accuracy of the Gaussian approximant.
    pub approx_eps: f64,
    /// Refuse stage 2 when its expected circuit count exceeds this.
    pub trial_cap: u64,
    /// Check `|E_hat - E_0| <= sigma` and `eta <= p_0` against the spectrum (tests only).
    pub check_promise: bool,
}

impl CertParams {
    pub fn new(eps: f64, eta: f64, sigma: f64, e_hat: f64, delta: f64) -> Result<Self, CertError> {
        let bad = |m: String| Err(CertError::InvalidParameters(m));
        if !(eps > 0.0 && eps.is_finite()) {
            return bad(format!("eps must be positive, got {eps}"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {eta}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {sigma}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {delta}"));
        }
        if !e_hat.is_finite() {
            return bad("estimate must be finite".into());
        }
        let tau = eps * eps * eta / 160.0;
        Ok(Self {
            eps,
            eta,
            sigma,
            e_hat,
            delta,
            tau,
            l: sigma * (8.0 * (1.0 / tau).ln()).sqrt(),
            c_prime: 1.0 / (80.0 * eta),
            approx_eps: tau / 10.0,
            trial_cap: u64::MAX / 4,
            check_promise: false,
        })
    }

    /// Additive precision of every estimate, `eps^2 eta / 160`.
    pub fn precision(&self) -> f64 {
        self.tau
    }

    pub fn tail_threshold(&self) -> f64 {
        self.eps * self.eps * self.eta / 80.0
    }

    pub fn variance_tolerance(&self) -> f64 {
        2.0 * self.eps * self.eps * self.eta
    }

    pub fn tail_window(&self) -> (f64, f64) {
        (self.e_hat + 0.5 * self.l, self.e_hat + 2.0 * self.l)
    }

    pub fn central_window(&self) -> (f64, f64) {
        (self.e_hat - self.l, self.e_hat + self.l)
    }

    /// Stage-1 circuits: Bernstein count for precision `t / F` in acceptance
    /// probability at confidence `1 - delta/2`, with variance at most `4t / F`
    /// (larger tail masses are rejected with margin anyway).
    pub fn stage1_trials(&self, c: f64) -> u64 {
        let f = self.tail_scale(c);
        let t = self.tau / f;
        let v = 4.0 * self.tau / f;
        ((2.0 * v / (t * t) + 2.0 / (3.0 * t)) * (4.0 / self.delta).ln()).ceil() as u64
    }

    /// Stage-2 accepted samples. Samples relative to `E_hat` lie in `[-L, L]`;
    /// Hoeffding at `delta/8` per moment with the first moment to `t / (4L)`
    /// and the second to `t / 2` keeps `S = m2 - m1^2` within `t`. The first
    /// moment dominates.
    pub fn stage2_samples(&self) -> u64 {
        let l = self.l;
        let t = self.tau;
        let ln = (8.0 / self.delta).ln();
        let k_mean = 32.0 * l.powi(4) * ln / (t * t);
        let k_second = 2.0 * l.powi(4) * ln / (t * t);
        k_mean.max(k_second).ceil() as u64
    }

    /// Factor `F` with `int_tail p * n_sigma = F * (mean acceptance)`.
    pub fn tail_scale(&self, c: f64) -> f64 {
        let (a, b) = self.tail_window();
        c * c * (b - a) / (self.sigma * (2.0 * PI).sqrt())
    }

    fn nu(&self) -> NuParams {
        NuParams { sigma: self.sigma, eps: self.approx_eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NotPeaked,
    ExcessVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertVerdict {
    pub decision: Decision,
    pub reason: Option<RejectReason>,
    /// Conditioned mean `M`, reported on acceptance.
    pub refined_estimate: Option<f64>,
    pub tail_mass: f64,
    pub conditioned_mean: Option<f64>,
    /// `S`, the conditioned variance.
    pub conditioned_variance: Option<f64>,
    pub stage1_trials: u64,
    pub stage2_trials: u64,
    pub accepted_samples: u64,
    /// Circuits over both stages.
    pub samples_used: u64,
}

impl CertVerdict {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

/// Runs the two-stage test with the Gaussian oracle.
pub fn gsee_cert(
    params: &CertParams,
    spec: &SpectralMeasure,
    oracle: &mut AcceptanceOracle,
) -> Result<CertVerdict, CertError> {
    if params.check_promise {
        let e0 = spec.ground_energy();
        if (params.e_hat - e0).abs() > params.sigma {
            return Err(CertError::PromiseViolationDetected(format!(
                "|E_hat - E_0| = {} exceeds sigma = {}",
                (params.e_hat - e0).abs(),
                params.sigma
            )));
        }
        if params.eta > spec.overlap0() {
            return Err(CertError::PromiseViolationDetected(format!(
                "eta = {} exceeds p_0 = {}",
                params.eta,
                spec.overlap0()
            )));
        }
    }
    let c = oracle.c();
    let (ta, tb) = params.tail_window();
    let tail = WindowProfile::build(oracle, spec, params.nu(), Proposal::uniform(ta, tb)?)?;
    let n1 = params.stage1_trials(c);
    let hits = run_window_trials(oracle, &tail, n1).accepted;
    let tail_mass = params.tail_scale(c) * hits as f64 / n1 as f64;
    let mut verdict = CertVerdict {
        decision: Decision::Reject,
        reason: Some(RejectReason::NotPeaked),
        refined_estimate: None,
        tail_mass,
        conditioned_mean: None,
        conditioned_variance: None,
        stage1_trials: n1,
        stage2_trials: 0,
        accepted_samples: 0,
        samples_used: n1,
    };
    if tail_mass >= params.tail_threshold() {
        return Ok(verdict);
    }
    let (ca, cb) = params.central_window();
    let central = WindowProfile::build(oracle, spec, params.nu(), Proposal::uniform(ca, cb)?)?;
    let k = params.stage2_samples();
    let expected = k as f64 / central.mean_accept;
    if !(expected <= params.trial_cap as f64) {
        return Err(CertError::TrialCapExhausted { cap: params.trial_cap, expected });
    }
    let (n2, stats) = run_window_until(oracle, &central, k);
    let m1 = stats.sum / k as f64;
    let s = stats.sum_sq / k as f64 - m1 * m1;
    let mean = central.proposal.center() + m1;
    verdict.conditioned_mean = Some(mean);
    verdict.conditioned_variance = Some(s);
    verdict.stage2_trials = n2;
    verdict.accepted_samples = k;
    verdict.samples_used = n1 + n2;
    if (s - params.sigma * params.sigma).abs() <= params.variance_tolerance() {
        verdict.decision = Decision::Accept;
        verdict.reason = None;
        verdict.refined_estimate = Some(mean);
    } else {
        verdict.reason = Some(RejectReason::ExcessVariance);
    }
    Ok(verdict)
}

/// Variance of the mixture `sum_i w_i N(m_i, sigma^2)`.
pub fn mixture_variance(weights: &[f64], means: &[f64], sigma: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum::<f64>() / total;
    let second: f64 = weights.iter().zip(means).map(|(w, m)| w * (m - mean).powi(2)).sum::<f64>() / total;
    sigma * sigma + second
}

/// Lower bound `sigma^2 + eta c^2 eps^2` on the mixture variance when the
/// mixture mean is at least `c eps` from the lowest component mean, with
/// `eta` the weight of that component.
pub fn mixture_variance_bound(weights: &[f64], means: &[f64], sigma: f64, eps: f64, c: f64) -> Result<f64, CertError> {
    if weights.is_empty() || weights.len() != means.len() {
        return Err(CertError::InvalidParameters("weights and means must be non-empty and of equal length".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CertError::InvalidParameters("weights must form a probability vector".into()));
    }
    let (i0, e0) = means.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
    if (mean - e0).abs() < c * eps {
        return Err(CertError::InvalidParameters(format!(
            "mean shift {} below c eps = {}",
            (mean - e0).abs(),
            c * eps
        )));
    }
    Ok(sigma * sigma + weights[i0] * c * c * eps * eps)
}

/// Window integrals of `p * n_sigma` and the discrete moments of the levels
/// within `L/2` of the centre that they approximate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMoments {
    /// `int_{E-L}^{E+L} p * n_sigma`.
    pub mass: f64,
    /// `int x (p * n_sigma)`.
    pub first: f64,
    /// `int x^2 (p * n_sigma)`.
    pub second: f64,
    /// `sum_G p_i`, `sum_G p_i E_i`, `sum_G p_i (sigma^2 + E_i^2)`.
    pub good_mass: f64,
    pub good_first: f64,
    pub good_second: f64,
    /// Largest quadrature error estimate.
    pub error: f64,
}

impl WindowMoments {
    pub fn conditioned_mean(&self) -> f64 {
        self.first / self.mass
    }

    pub fn conditioned_variance(&self) -> f64 {
        let m = self.conditioned_mean();
        self.second / self.mass - m * m
    }

    /// Largest gap between a window integral and its discrete counterpart.
    pub fn discrete_gap(&self) -> f64 {
        (self.mass - self.good_mass)
            .abs()
            .max((self.first - self.good_first).abs())
            .max((self.second - self.good_second).abs())
    }
}

/// Window moments on `[E - L, E + L]` by adaptive quadrature, level by level.
pub fn peaked_window_moments(
    spec: &SpectralMeasure,
    sigma: f64,
    e_hat: f64,
    l: f64,
) -> Result<WindowMoments, CertError> {
    if !(sigma > 0.0 && l > 0.0) {
        return Err(CertError::InvalidParameters("sigma and L must be positive".into()));
    }
    let (a, b) = (e_hat - l, e_hat + l);
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let mut out = WindowMoments {
        mass: 0.0,
        first: 0.0,
        second: 0.0,
        good_mass: 0.0,
        good_first: 0.0,
        good_second: 0.0,
        error: 0.0,
    };
    for (e, p) in spec.levels() {
        let density = |x: f64| norm * (-0.5 * ((x - e) / sigma).powi(2)).exp();
        // Split at the level so the peak is resolved.
        let cut = e.clamp(a, b);
        for k in 0..3 {
            let f = |x: f64| density(x) * x.powi(k);
            let mut v = 0.0;
            for (lo, hi) in [(a, cut), (cut, b)] {
                if hi > lo {
                    let (val, err) = quadrature::integrate_with_error(&f, lo, hi, 1e-13)?;
                    if !(err <= 1e-9) {
                        return Err(QuadratureError::QuadratureFailure { tol: 1e-9, estimate: val, error: err }.into());
                    }
                    v += val;
                    out.error = out.error.max(p * err);
                }
            }
            match k {
                0 => out.mass += p * v,
                1 => out.first += p * v,
                _ => out.second += p * v,
            }
        }
        if (e - e_hat).abs() <= 0.5 * l {
            out.good_mass += p;
            out.good_first += p * e;
            out.good_second += p * (sigma * sigma + e * e);
        }
    }
    Ok(out)
}
