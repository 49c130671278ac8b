//! Quantum-assisted rejection sampling from `p * nu`.
//!
//! A proposal `x ~ U[a, b]` is accepted with the oracle's success probability
//! for the Gaussian centred at `x`. Accepted values are then distributed as
//! the convolution `p * nu` restricted to the window, with `nu = N(0, sigma^2)`
//! realized by `g(y) = exp(-y^2 / (4 sigma^2))`, i.e. an operator Gaussian of
//! width `sqrt(2) sigma`.
//!
//! Two samplers share the same law:
//! * [`sample_conv`] proposes and measures one circuit at a time;
//! * [`WindowProfile`] tabulates the acceptance probability over the window
//!   once, then draws the number of successes of `n` circuits as a binomial
//!   and the accepted values from the normalized profile. This is what makes
//!   runs with 10^8+ circuits affordable.

use crate::oracle::{AcceptanceOracle, OperatorFunction, OracleError};
use crate::polyapprox::{ChebyshevSeries, QueryCost};
use crate::quadrature::{self, QuadratureError};
use crate::spectrum::SpectralMeasure;
use crate::stats;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RejectionError {
    #[error("trial cap {cap} exhausted after {accepted} of {target} samples")]
    TrialCapExhausted { cap: u64, accepted: u64, target: u64, partial: Box<RejectionRun> },
    #[error("invalid proposal window [{a}, {b}]")]
    InvalidProposal { a: f64, b: f64 },
    #[error("acceptance profile vanishes on the window")]
    EmptyProfile,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Uniform proposal on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proposal {
    pub a: f64,
    pub b: f64,
}

impl Proposal {
    pub fn uniform(a: f64, b: f64) -> Result<Self, RejectionError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(RejectionError::InvalidProposal { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// Target kernel `nu = N(0, sigma^2)` and the accuracy of its realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuParams {
    pub sigma: f64,
    pub eps: f64,
}

impl NuParams {
    /// Kernel whose operator Gaussian has width `s` (so `nu = N(0, s^2 / 2)`).
    pub fn from_operator_width(s: f64, eps: f64) -> Self {
        Self { sigma: s / std::f64::consts::SQRT_2, eps }
    }

    pub fn operator_width(&self) -> f64 {
        self.sigma * std::f64::consts::SQRT_2
    }

    pub fn function_at(&self, x: f64) -> OperatorFunction {
        OperatorFunction::Gaussian { sigma: self.operator_width(), eps: self.eps, center: x }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRun {
    pub accepted: Vec<f64>,
    /// `(worker, trial index)` of every accepted value.
    pub origin: Vec<(u32, u64)>,
    pub trials: u64,
}

impl RejectionRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.trials as f64
        }
    }

    /// CSV with columns `value,worker,trial`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["value", "worker", "trial"])?;
        for (v, (wk, t)) in self.accepted.iter().zip(&self.origin) {
            out.write_record([format!("{v:e}"), wk.to_string(), t.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Default stopping rule: `50 * n_target * ceil(|M|^2)`.
pub fn default_trial_cap(n_target: u64, expected_trials: f64) -> u64 {
    let m = if expected_trials.is_finite() { expected_trials.ceil().max(1.0) } else { 1e12 };
    (50.0 * n_target as f64 * m).min(u64::MAX as f64 / 2.0) as u64
}

/// Draws accepted samples one circuit at a time.
pub fn sample_conv(
    spec: &SpectralMeasure,
    nu: NuParams,
    proposal: Proposal,
    oracle: &mut AcceptanceOracle,
    n_target: u64,
    trial_cap: u64,
) -> Result<RejectionRun, RejectionError> {
    sample_conv_worker(spec, nu, proposal, oracle, n_target, trial_cap, 0)
}

fn sample_conv_worker(
    spec: &SpectralMeasure,
    nu: NuParams,
    proposal: Proposal,
    oracle: &mut AcceptanceOracle,
    n_target: u64,
    trial_cap: u64,
    worker: u32,
) -> Result<RejectionRun, RejectionError> {
    let mut run = RejectionRun { accepted: Vec::new(), origin: Vec::new(), trials: 0 };
    while (run.accepted.len() as u64) < n_target {
        if run.trials >= trial_cap {
            return Err(RejectionError::TrialCapExhausted {
                cap: trial_cap,
                accepted: run.accepted.len() as u64,
                target: n_target,
                partial: Box::new(run),
            });
        }
        let x = proposal.a + proposal.width() * oracle.rng_mut().random::<f64>();
        let trial = run.trials;
        run.trials += 1;
        if oracle.sample_outcome(spec, nu.function_at(x))? {
            run.accepted.push(x);
            run.origin.push((worker, trial));
        }
    }
    Ok(run)
}

/// Splits `n_target` over the given oracles (one per worker) and concatenates
/// results in worker order.
pub fn sample_conv_parallel(
    spec: &SpectralMeasure,
    nu: NuParams,
    proposal: Proposal,
    oracles: &mut [AcceptanceOracle],
    n_target: u64,
    trial_cap: u64,
) -> Result<RejectionRun, RejectionError> {
    use rayon::prelude::*;
    let w = oracles.len() as u64;
    assert!(w > 0, "need at least one worker");
    let parts: Vec<Result<RejectionRun, RejectionError>> = oracles
        .par_iter_mut()
        .enumerate()
        .map(|(i, o)| {
            let share = n_target / w + u64::from((i as u64) < n_target % w);
            sample_conv_worker(spec, nu, proposal, o, share, trial_cap, i as u32)
        })
        .collect();
    let mut run = RejectionRun { accepted: Vec::new(), origin: Vec::new(), trials: 0 };
    for p in parts {
        let p = p?;
        run.accepted.extend(p.accepted);
        run.origin.extend(p.origin);
        run.trials += p.trials;
    }
    Ok(run)
}

/// Expected number of circuits per accepted sample, `|M|^2`, for normalization `c`:
/// `c^2 (b - a) / (sigma sqrt(2 pi) int_a^b (p * n_sigma))`.
pub fn expected_trials(sigma: f64, proposal: Proposal, spec: &SpectralMeasure, c: f64) -> Result<f64, RejectionError> {
    let mass = convolved_mass(spec, sigma, proposal.a, proposal.b)?;
    Ok(c * c * proposal.width() / (sigma * (2.0 * std::f64::consts::PI).sqrt() * mass))
}

/// [`expected_trials`] for a unit-normalized encoding.
pub fn expected_trials_bound(sigma: f64, proposal: Proposal, spec: &SpectralMeasure) -> Result<f64, RejectionError> {
    expected_trials(sigma, proposal, spec, 1.0)
}

/// Density of `p * N(0, sigma^2)`.
pub fn convolved_density(spec: &SpectralMeasure, sigma: f64, x: f64) -> f64 {
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    spec.levels().map(|(e, p)| p * norm * (-(x - e) * (x - e) / (2.0 * sigma * sigma)).exp()).sum()
}

/// `int_a^b (p * n_sigma)` by adaptive quadrature.
pub fn convolved_mass(spec: &SpectralMeasure, sigma: f64, a: f64, b: f64) -> Result<f64, QuadratureError> {
    quadrature::integrate(|x| convolved_density(spec, sigma, x), a, b, quadrature::DEFAULT_TOL)
}

const PROFILE_CELLS: usize = 8192;
const MAX_PROFILE_DEGREE: usize = 4096;
// Cells holding at least this many samples are summed through their moments.
const CELL_MOMENT_THRESHOLD: u64 = 32;

/// Acceptance probability over a proposal window, tabulated for batched sampling.
#[derive(Debug, Clone)]
pub struct WindowProfile {
    pub proposal: Proposal,
    series: ChebyshevSeries<f64>,
    /// Mean acceptance probability under the uniform proposal.
    pub mean_accept: f64,
    cost: QueryCost,
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Sufficient statistics of accepted samples, relative to the window centre.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchStats {
    pub accepted: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct ProfileKey {
    spec: u64,
    config: [u64; 4],
    nu: [u64; 2],
    window: [u64; 2],
}

fn profile_cache() -> &'static Mutex<HashMap<ProfileKey, Arc<WindowProfile>>> {
    static CACHE: OnceLock<Mutex<HashMap<ProfileKey, Arc<WindowProfile>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl WindowProfile {
    /// Tabulates (or fetches from the process cache) the acceptance profile.
    pub fn build(
        oracle: &AcceptanceOracle,
        spec: &SpectralMeasure,
        nu: NuParams,
        proposal: Proposal,
    ) -> Result<Arc<Self>, RejectionError> {
        let cfg = oracle.config();
        let key = ProfileKey {
            spec: spec.fingerprint(),
            config: [cfg.backend as u64, cfg.c.to_bits(), cfg.m as u64, cfg.max_degree as u64],
            nu: [nu.sigma.to_bits(), nu.eps.to_bits()],
            window: [proposal.a.to_bits(), proposal.b.to_bits()],
        };
        if let Some(p) = profile_cache().lock().expect("profile cache").get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(Self::tabulate(oracle, spec, nu, proposal)?);
        profile_cache().lock().expect("profile cache").insert(key, Arc::clone(&p));
        Ok(p)
    }

    fn tabulate(
        oracle: &AcceptanceOracle,
        spec: &SpectralMeasure,
        nu: NuParams,
        proposal: Proposal,
    ) -> Result<Self, RejectionError> {
        let (a, b) = (proposal.a, proposal.b);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let q = |t: f64| oracle.accept_prob(spec, nu.function_at(mid + half * t));
        // Validate the whole window once (domain errors surface here).
        q(-1.0)?;
        q(1.0)?;
        let q = |t: f64| q(t).unwrap_or(f64::NAN);
        let mut n = 64;
        let series = loop {
            let s = ChebyshevSeries::interpolate(q, n);
            let scale = s.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if s.tail_magnitude(8) <= 1e-14 * scale.max(1e-300) || n >= MAX_PROFILE_DEGREE {
                break s;
            }
            n *= 2;
        };
        if series.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(RejectionError::EmptyProfile);
        }
        let anti = series.integral();
        let cells = PROFILE_CELLS;
        let mut edges = Vec::with_capacity(cells + 1);
        let mut cumulative = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        let mut prev = anti.eval(-1.0);
        cumulative.push(0.0);
        for i in 0..=cells {
            let t = -1.0 + 2.0 * i as f64 / cells as f64;
            edges.push(series.eval(t).max(0.0));
            if i > 0 {
                let cur = anti.eval(t);
                acc += (cur - prev).max(0.0);
                prev = cur;
                cumulative.push(acc);
            }
        }
        // `acc` approximates int_{-1}^{1} q dt; mean over the window is acc / 2.
        let mean_accept = (acc / 2.0).clamp(0.0, 1.0);
        if !(acc > 0.0) {
            return Err(RejectionError::EmptyProfile);
        }
        let cost = oracle.realize(nu.function_at(mid))?.query_cost(oracle.config().m);
        Ok(Self { proposal, series, mean_accept, cost, edges, cumulative })
    }

    /// Acceptance probability for a proposal at `x`.
    pub fn accept_at(&self, x: f64) -> f64 {
        let t = (x - self.proposal.center()) / (0.5 * self.proposal.width());
        self.series.eval(t.clamp(-1.0, 1.0)).clamp(0.0, 1.0)
    }

    pub fn query_cost(&self) -> QueryCost {
        self.cost
    }

    fn cell_width(&self) -> f64 {
        self.proposal.width() / PROFILE_CELLS as f64
    }

    fn cell_left(&self, i: usize) -> f64 {
        self.proposal.a + self.cell_width() * i as f64
    }

    /// Position in `[0, 1)` inside cell `i` under the linear density through the edge values.
    fn draw_in_cell<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        let (f0, f1) = (self.edges[i], self.edges[i + 1]);
        let u: f64 = rng.random();
        if (f1 - f0).abs() <= 1e-12 * (f0 + f1) || f0 + f1 <= 0.0 {
            return u;
        }
        // Solve f0 t + (f1 - f0) t^2 / 2 = u (f0 + f1) / 2.
        let d = f1 - f0;
        let disc = f0 * f0 + d * u * (f0 + f1);
        ((disc.max(0.0).sqrt() - f0) / d).clamp(0.0, 1.0)
    }

    fn pick_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.clamp(1, PROFILE_CELLS) - 1
    }

    /// One draw from the accepted-sample law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let i = self.pick_cell(rng);
        self.cell_left(i) + self.cell_width() * self.draw_in_cell(i, rng)
    }

    /// Sums of `k` accepted samples (relative to the window centre).
    pub fn sample_stats<R: Rng + ?Sized>(&self, rng: &mut R, k: u64) -> BatchStats {
        let c = self.proposal.center();
        let mut out = BatchStats { accepted: k, ..Default::default() };
        if k < 4 * PROFILE_CELLS as u64 {
            for _ in 0..k {
                let y = self.sample(rng) - c;
                out.sum += y;
                out.sum_sq += y * y;
            }
            return out;
        }
        // Multinomial cell counts via sequential conditional binomials.
        let h = self.cell_width();
        let total = *self.cumulative.last().expect("non-empty");
        let mut remaining = k;
        let mut mass_left = total;
        for i in 0..PROFILE_CELLS {
            if remaining == 0 {
                break;
            }
            let m = self.cumulative[i + 1] - self.cumulative[i];
            let n = if i + 1 == PROFILE_CELLS || mass_left <= 0.0 {
                remaining
            } else {
                stats::binomial(rng, remaining, (m / mass_left).clamp(0.0, 1.0))
            };
            remaining -= n;
            mass_left -= m;
            if n == 0 {
                continue;
            }
            let left = self.cell_left(i) - c;
            let (st, st2) = if n < CELL_MOMENT_THRESHOLD {
                (0..n).fold((0.0, 0.0), |(s, s2), _| {
                    let t = self.draw_in_cell(i, rng);
                    (s + t, s2 + t * t)
                })
            } else {
                self.cell_moment_sums(i, n, rng)
            };
            let nf = n as f64;
            out.sum += nf * left + h * st;
            out.sum_sq += nf * left * left + 2.0 * left * h * st + h * h * st2;
        }
        out
    }

    /// `(sum t, sum t^2)` over `n` positions in cell `i`, drawn from their
    /// joint normal approximation with the exact linear-density moments.
    fn cell_moment_sums<R: Rng + ?Sized>(&self, i: usize, n: u64, rng: &mut R) -> (f64, f64) {
        let (f0, f1) = (self.edges[i], self.edges[i + 1]);
        let z = f0 + f1;
        let (m1, m2, m3, m4) = if z <= 0.0 {
            (0.5, 1.0 / 3.0, 0.25, 0.2)
        } else {
            (
                (f0 + 2.0 * f1) / (3.0 * z),
                (f0 + 3.0 * f1) / (6.0 * z),
                (f0 + 4.0 * f1) / (10.0 * z),
                (f0 + 5.0 * f1) / (15.0 * z),
            )
        };
        let v11 = (m2 - m1 * m1).max(0.0);
        let v12 = m3 - m1 * m2;
        let v22 = (m4 - m2 * m2).max(0.0);
        let nf = n as f64;
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let l11 = v11.sqrt();
        let l21 = if l11 > 0.0 { v12 / l11 } else { 0.0 };
        let l22 = (v22 - l21 * l21).max(0.0).sqrt();
        let s = nf * m1 + nf.sqrt() * l11 * z1;
        let s2 = nf * m2 + nf.sqrt() * (l21 * z1 + l22 * z2);
        (s.clamp(0.0, nf), s2.clamp(0.0, nf))
    }
}

/// Runs `trials` proposals through the oracle in one batch, returning the
/// sufficient statistics of the accepted values. Books `trials` circuits.
pub fn run_window_trials(oracle: &mut AcceptanceOracle, profile: &WindowProfile, trials: u64) -> BatchStats {
    oracle.charge(trials, profile.query_cost());
    let k = stats::binomial(oracle.rng_mut(), trials, profile.mean_accept);
    profile.sample_stats(oracle.rng_mut(), k)
}

/// Proposals needed to collect `k` acceptances, then their statistics.
pub fn run_window_until(oracle: &mut AcceptanceOracle, profile: &WindowProfile, k: u64) -> (u64, BatchStats) {
    let failures = stats::negative_binomial(oracle.rng_mut(), k, profile.mean_accept);
    let trials = k + failures;
    oracle.charge(trials, profile.query_cost());
    (trials, profile.sample_stats(oracle.rng_mut(), k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleConfig;
    use crate::rng;
    use crate::spectrum::ModelDomain;

    fn single() -> SpectralMeasure {
        SpectralMeasure::synth(ModelDomain::BlockEncoding, &[0.0], &[1.0]).unwrap()
    }

    #[test]
    fn symmetric_single_level_mean() {
        let spec = single();
        let mut o = AcceptanceOracle::new(OracleConfig::ideal(), rng::stream(3, 0, 0));
        let nu = NuParams { sigma: 0.05, eps: 1e-6 };
        let run = sample_conv(&spec, nu, Proposal::uniform(-0.3, 0.3).unwrap(), &mut o, 4000, 1_000_000).unwrap();
        let m = stats::mean(&run.accepted);
        assert!(m.abs() < 3.0 * 0.05 / (4000f64).sqrt());
        assert_eq!(run.trials, o.run_report().circuits);
    }

    #[test]
    fn trial_cap_returns_partial_run() {
        let spec = single();
        let mut o = AcceptanceOracle::new(OracleConfig::ideal(), rng::stream(3, 0, 0));
        let nu = NuParams { sigma: 0.01, eps: 1e-6 };
        let far = Proposal::uniform(0.8, 0.9).unwrap();
        match sample_conv(&spec, nu, far, &mut o, 10, 500) {
            Err(RejectionError::TrialCapExhausted { partial, .. }) => assert_eq!(partial.trials, 500),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expected_trials_single_gaussian() {
        let spec = single();
        let p = Proposal::uniform(-0.5, 0.5).unwrap();
        let m = expected_trials_bound(0.05, p, &spec).unwrap();
        let expect = 1.0 / (0.05 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((m - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn profile_mean_matches_quadrature() {
        let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &[-0.5, 0.5], &[0.6, 0.4]).unwrap();
        let o = AcceptanceOracle::new(OracleConfig::ideal(), rng::stream(0, 0, 0));
        let nu = NuParams { sigma: 0.1, eps: 1e-6 };
        let p = Proposal::uniform(-0.8, -0.2).unwrap();
        let prof = WindowProfile::build(&o, &spec, nu, p).unwrap();
        let expect = 1.0 / expected_trials_bound(0.1, p, &spec).unwrap();
        assert!((prof.mean_accept - expect).abs() < 1e-10, "{} {}", prof.mean_accept, expect);
    }

    #[test]
    fn batched_moments_agree_with_direct_draws() {
        let spec = single();
        let o = AcceptanceOracle::new(OracleConfig::ideal(), rng::stream(0, 0, 0));
        let nu = NuParams { sigma: 0.05, eps: 1e-6 };
        let prof = WindowProfile::build(&o, &spec, nu, Proposal::uniform(-0.2, 0.3).unwrap()).unwrap();
        let mut r = rng::stream(9, 0, 0);
        let k = 2_000_000u64;
        let s = prof.sample_stats(&mut r, k);
        // Window centre is 0.05; the law is N(0, 0.05^2) truncated at +-4 sigma.
        let mean = s.sum / k as f64 + 0.05;
        let var = s.sum_sq / k as f64 - (s.sum / k as f64).powi(2);
        assert!(mean.abs() < 4.0 * 0.05 / (k as f64).sqrt(), "{mean}");
        let tv = 0.05f64.powi(2) * 0.99886;
        assert!((var - tv).abs() < 5e-3 * tv, "{var} {tv}");
    }
}
