//! Experiment configuration, parallel execution and result files.
//!
//! A run expands the config grid into points, executes `trials` seeded
//! trials per point on a worker pool and gathers rows in (point, trial)
//! order. Every trial draws from its own random streams, so the CSV is
//! byte-identical for any thread count.

mod approx;
mod config;
mod families;

pub use approx::approx_trial;
pub use config::{Algorithm, BackendConfig, ExperimentConfig, OutputConfig, SpecSource, VERSION_TAG};
pub use families::{random_levels, P0};

use crate::certify::{gsee_cert, CertParams, Decision};
use crate::gsee::{basic_gsee, interpolation_gap, make_schedule, run_adv_trial, EstimateResult, GseeError};
use crate::oracle::AcceptanceOracle;
use crate::rng;
use crate::spectrum::{SpectralMeasure, SpectrumError};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "GSEE_LAB_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub index: usize,
    pub eps: f64,
    pub eta: f64,
    /// Gap promise handed to the estimator (certification: the gap in the sigma rule).
    pub gap: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub point: usize,
    pub trial: u64,
    pub eps: f64,
    pub eta: f64,
    pub gap: Option<f64>,
    pub beta: Option<f64>,
    pub branch: &'static str,
    pub estimate: Option<f64>,
    pub e0: f64,
    pub abs_error: Option<f64>,
    pub success: bool,
    pub circuits: u64,
    pub queries_total: u64,
    pub max_depth: u64,
    pub accepted_samples: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertRow {
    pub point: usize,
    pub trial: u64,
    pub eps: f64,
    pub eta: f64,
    pub sigma: f64,
    pub e_hat: f64,
    pub decision: &'static str,
    pub reason: &'static str,
    pub refined_estimate: Option<f64>,
    pub abs_error: Option<f64>,
    pub tail_mass: Option<f64>,
    pub conditioned_variance: Option<f64>,
    pub samples_used: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxRow {
    pub trial: u64,
    pub kind: &'static str,
    /// Width (Gaussians) or left band edge (thresholds).
    pub p1: f64,
    pub eps: f64,
    /// Centre, right band edge or period.
    pub p2: f64,
    pub degree: usize,
    pub certified_error: f64,
    /// Error measured here on an independent grid.
    pub grid_error: f64,
    pub coeff_sum: Option<f64>,
    pub ok: bool,
    pub error: String,
}

impl ApproxRow {
    #[allow(clippy::too_many_arguments)]
    fn new(
        trial: u64,
        kind: &'static str,
        p1: f64,
        eps: f64,
        p2: f64,
        degree: usize,
        certified_error: f64,
        grid_error: f64,
        coeff_sum: Option<f64>,
    ) -> Self {
        Self {
            trial,
            kind,
            p1,
            eps,
            p2,
            degree,
            certified_error,
            grid_error,
            coeff_sum,
            ok: false,
            error: String::new(),
        }
    }

    fn check(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }

    fn failed(trial: u64, kind: &'static str, p1: f64, eps: f64, p2: f64, error: String) -> Self {
        Self {
            trial,
            kind,
            p1,
            eps,
            p2,
            degree: 0,
            certified_error: f64::NAN,
            grid_error: f64::NAN,
            coeff_sum: None,
            ok: false,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Estimate(Vec<EstimateRow>),
    Cert(Vec<CertRow>),
    Approx(Vec<ApproxRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Estimate(r) => r.len(),
            Rows::Cert(r) => r.len(),
            Rows::Approx(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV with a header row, even when empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), HarnessError> {
        fn write<W: std::io::Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> Result<(), HarnessError> {
            let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            out.write_record(header)?;
            for r in rows {
                out.serialize(r)?;
            }
            out.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
            Ok(())
        }
        match self {
            Rows::Estimate(r) => write(
                w,
                &[
                    "point",
                    "trial",
                    "eps",
                    "eta",
                    "gap",
                    "beta",
                    "branch",
                    "estimate",
                    "e0",
                    "abs_error",
                    "success",
                    "circuits",
                    "queries_total",
                    "max_depth",
                    "accepted_samples",
                    "error",
                ],
                r,
            ),
            Rows::Cert(r) => write(
                w,
                &[
                    "point",
                    "trial",
                    "eps",
                    "eta",
                    "sigma",
                    "e_hat",
                    "decision",
                    "reason",
                    "refined_estimate",
                    "abs_error",
                    "tail_mass",
                    "conditioned_variance",
                    "samples_used",
                    "error",
                ],
                r,
            ),
            Rows::Approx(r) => write(
                w,
                &[
                    "trial",
                    "kind",
                    "p1",
                    "eps",
                    "p2",
                    "degree",
                    "certified_error",
                    "grid_error",
                    "coeff_sum",
                    "ok",
                    "error",
                ],
                r,
            ),
        }
    }

    pub fn to_csv_string(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| HarnessError::Io(e.to_string()))
    }
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / ((n - 1) * n) as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se }
    }
}

/// Aggregates over the trials of one grid point. For certification runs
/// `success` is the acceptance rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: GridPoint,
    pub trials: u64,
    /// Trials that ended in an error.
    pub failures: u64,
    pub success: Estimate,
    pub abs_error: Estimate,
    pub circuits: Estimate,
    pub max_depth: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub config_hash: String,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub points: Vec<GridPoint>,
    pub summary: Vec<PointSummary>,
    #[serde(skip)]
    pub rows: Rows,
    pub wall_clock_s: f64,
}

fn product<T: Copy>(xs: &[T]) -> Vec<Option<T>> {
    if xs.is_empty() {
        vec![None]
    } else {
        xs.iter().copied().map(Some).collect()
    }
}

/// Expands the grid in `eps`, `eta`, `gap`/`beta`, `sigma` order.
pub fn grid_points(cfg: &ExperimentConfig) -> Result<Vec<GridPoint>, HarnessError> {
    if cfg.algorithm == Algorithm::Approx {
        return Ok(vec![GridPoint { index: 0, eps: f64::NAN, eta: f64::NAN, gap: None, beta: None, sigma: None }]);
    }
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        for eta in product(&cfg.eta) {
            let spec = cfg.spec.build(eta)?;
            let eta = eta.unwrap_or(0.5 * spec.overlap0());
            for gap in product(&cfg.gap) {
                for beta in product(&cfg.beta) {
                    let gap = match (cfg.algorithm, beta) {
                        (Algorithm::Sweep, Some(b)) => Some(interpolation_gap(b, eps, true_gap(&spec)?)),
                        (Algorithm::Basic, _) => None,
                        _ => Some(gap.map_or_else(|| true_gap(&spec), Ok)?),
                    };
                    for sigma in product(&cfg.sigma) {
                        let sigma = match cfg.algorithm {
                            Algorithm::Cert => Some(sigma.map_or_else(
                                || Ok(cfg.sigma_scale * small_sigma(gap.expect("cert gap"), eps, eta)),
                                Ok::<_, HarnessError>,
                            )?),
                            _ => None,
                        };
                        out.push(GridPoint { index: out.len(), eps, eta, gap, beta, sigma });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn true_gap(spec: &SpectralMeasure) -> Result<f64, HarnessError> {
    spec.gap_true().ok_or_else(|| HarnessError::Config("single-level spectrum has no gap".into()))
}

/// Width `gap / (10 sqrt(ln(2 / (eta eps))))` at which certification is
/// expected to accept.
pub fn small_sigma(gap: f64, eps: f64, eta: f64) -> f64 {
    gap / (10.0 * (2.0 / (eta * eps)).ln().sqrt())
}

/// Worker count: explicit value, else the environment variable, else all cores.
pub fn thread_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

enum TrialOut {
    Estimate(EstimateRow),
    Cert(CertRow),
    Approx(Vec<ApproxRow>),
}

fn estimate_row(
    p: &GridPoint,
    trial: u64,
    spec: &SpectralMeasure,
    res: Result<EstimateResult, GseeError>,
) -> EstimateRow {
    let e0 = spec.ground_energy();
    let mut row = EstimateRow {
        point: p.index,
        trial,
        eps: p.eps,
        eta: p.eta,
        gap: p.gap,
        beta: p.beta,
        branch: "",
        estimate: None,
        e0,
        abs_error: None,
        success: false,
        circuits: 0,
        queries_total: 0,
        max_depth: 0,
        accepted_samples: 0,
        error: String::new(),
    };
    match res {
        Ok(r) => {
            let err = (r.estimate - e0).abs();
            row.branch = match r.schedule.map(|s| s.branch) {
                Some(crate::gsee::Branch::Refine) => "refine",
                _ => "basic",
            };
            row.estimate = Some(r.estimate);
            row.abs_error = Some(err);
            row.success = err <= p.eps;
            row.circuits = r.cost.circuits;
            row.queries_total = r.cost.queries_total;
            row.max_depth = r.cost.max_depth;
            row.accepted_samples = r.accepted_samples;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

fn run_trial(cfg: &ExperimentConfig, p: &GridPoint, spec: &SpectralMeasure, trial: u64) -> TrialOut {
    let oracle_cfg = cfg.backend.oracle();
    let global = p.index as u64 * cfg.trials + trial;
    let seed = cfg.master_seed;
    match cfg.algorithm {
        Algorithm::Approx => TrialOut::Approx(approx_trial(seed, trial, cfg.backend.max_degree)),
        Algorithm::Basic => {
            let mut o = AcceptanceOracle::new(oracle_cfg, rng::stream(seed, global, rng::lane::THRESHOLD_ORACLE));
            let res = basic_gsee(p.eps, cfg.delta, p.eta, &mut o, spec, cfg.scaling);
            TrialOut::Estimate(estimate_row(p, trial, spec, res))
        }
        Algorithm::Adv | Algorithm::Sweep => {
            let gap = p.gap.expect("estimators with a gap");
            let res =
                make_schedule(p.eps, cfg.delta, gap, p.eta, oracle_cfg.c, oracle_cfg.m, oracle_cfg.c, oracle_cfg.m)
                    .and_then(|s| run_adv_trial(&s, spec, oracle_cfg, oracle_cfg, seed, global, cfg.scaling));
            TrialOut::Estimate(estimate_row(p, trial, spec, res))
        }
        Algorithm::Cert => {
            let sigma = p.sigma.expect("cert sigma");
            let e_hat = cfg.e_hat.unwrap_or(spec.ground_energy() + cfg.e_hat_offset * sigma);
            let mut row = CertRow {
                point: p.index,
                trial,
                eps: p.eps,
                eta: p.eta,
                sigma,
                e_hat,
                decision: "error",
                reason: "",
                refined_estimate: None,
                abs_error: None,
                tail_mass: None,
                conditioned_variance: None,
                samples_used: 0,
                error: String::new(),
            };
            let mut o = AcceptanceOracle::new(oracle_cfg, rng::stream(seed, global, rng::lane::CERT_ORACLE));
            match CertParams::new(p.eps, p.eta, sigma, e_hat, cfg.delta).and_then(|c| gsee_cert(&c, spec, &mut o)) {
                Ok(v) => {
                    row.decision = match v.decision {
                        Decision::Accept => "accept",
                        Decision::Reject => "reject",
                    };
                    row.reason = match v.reason {
                        Some(crate::certify::RejectReason::NotPeaked) => "not_peaked",
                        Some(crate::certify::RejectReason::ExcessVariance) => "excess_variance",
                        None => "",
                    };
                    row.refined_estimate = v.refined_estimate;
                    row.abs_error = v.refined_estimate.map(|m| (m - spec.ground_energy()).abs());
                    row.tail_mass = Some(v.tail_mass);
                    row.conditioned_variance = v.conditioned_variance;
                    row.samples_used = v.samples_used;
                }
                Err(e) => row.error = e.to_string(),
            }
            TrialOut::Cert(row)
        }
    }
}

fn summarize(points: &[GridPoint], rows: &Rows, trials: u64) -> Vec<PointSummary> {
    points
        .iter()
        .map(|p| {
            let (ok, err, circ, depth, fail): (Vec<f64>, Vec<f64>, Vec<f64>, u64, u64) = match rows {
                Rows::Estimate(r) => {
                    let r: Vec<_> = r.iter().filter(|x| x.point == p.index).collect();
                    (
                        r.iter().map(|x| f64::from(u8::from(x.success))).collect(),
                        r.iter().filter_map(|x| x.abs_error).collect(),
                        r.iter().filter(|x| x.error.is_empty()).map(|x| x.circuits as f64).collect(),
                        r.iter().map(|x| x.max_depth).max().unwrap_or(0),
                        r.iter().filter(|x| !x.error.is_empty()).count() as u64,
                    )
                }
                Rows::Cert(r) => {
                    let r: Vec<_> = r.iter().filter(|x| x.point == p.index).collect();
                    (
                        r.iter().map(|x| f64::from(u8::from(x.decision == "accept"))).collect(),
                        r.iter().filter_map(|x| x.abs_error).collect(),
                        r.iter().filter(|x| x.error.is_empty()).map(|x| x.samples_used as f64).collect(),
                        0,
                        r.iter().filter(|x| !x.error.is_empty()).count() as u64,
                    )
                }
                Rows::Approx(r) => (
                    r.iter().map(|x| f64::from(u8::from(x.ok))).collect(),
                    r.iter().map(|x| x.grid_error).collect(),
                    Vec::new(),
                    r.iter().map(|x| x.degree as u64).max().unwrap_or(0),
                    r.iter().filter(|x| !x.error.is_empty()).count() as u64,
                ),
            };
            PointSummary {
                point: *p,
                trials,
                failures: fail,
                success: Estimate::of(&ok),
                abs_error: Estimate::of(&err),
                circuits: Estimate::of(&circ),
                max_depth: depth,
            }
        })
        .collect()
}

/// Runs every trial of every grid point on `threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let points = grid_points(cfg)?;
    let specs: Vec<Option<SpectralMeasure>> = points
        .iter()
        .map(|p| match cfg.algorithm {
            Algorithm::Approx => Ok(None),
            _ => cfg.spec.build(cfg.spec.depends_on_eta().then_some(p.eta)).map(Some),
        })
        .collect::<Result<_, _>>()?;
    let work: Vec<(usize, u64)> = (0..points.len()).flat_map(|i| (0..cfg.trials).map(move |t| (i, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(threads))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let placeholder = SpectralMeasure::synth(crate::spectrum::ModelDomain::BlockEncoding, &[0.0], &[1.0])?;
    let outs: Vec<TrialOut> = pool.install(|| {
        work.par_iter()
            .map(|&(i, t)| run_trial(cfg, &points[i], specs[i].as_ref().unwrap_or(&placeholder), t))
            .collect()
    });
    let rows = match cfg.algorithm {
        Algorithm::Approx => Rows::Approx(
            outs.into_iter().flat_map(|o| if let TrialOut::Approx(r) = o { r } else { Vec::new() }).collect(),
        ),
        Algorithm::Cert => Rows::Cert(
            outs.into_iter().filter_map(|o| if let TrialOut::Cert(r) = o { Some(r) } else { None }).collect(),
        ),
        _ => Rows::Estimate(
            outs.into_iter().filter_map(|o| if let TrialOut::Estimate(r) = o { Some(r) } else { None }).collect(),
        ),
    };
    let summary = summarize(&points, &rows, cfg.trials);
    Ok(RunRecord {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        version: VERSION_TAG,
        config: cfg.clone(),
        points,
        summary,
        rows,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Paths written by [`emit`].
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<stem>.csv` (one row per trial) and `<stem>.json` (config echo,
/// hash and per-point summary) into `dir`.
pub fn emit(record: &RunRecord, dir: &Path, stem: &str) -> Result<Emitted, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    let f = std::fs::File::create(&csv).map_err(|e| HarnessError::Io(e.to_string()))?;
    record.rows.write_csv(std::io::BufWriter::new(f))?;
    let body = serde_json::to_string_pretty(record).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(&json, body + "\n").map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(Emitted { csv, json })
}
