//! Simulated ancilla measurement.
//!
//! A `(c, m, 0)` block-encoding of `g(H)` applied to `|psi>` succeeds with
//! probability `c^-2 <psi| g(H)^2 |psi> = c^-2 sum_j p_j g(E_j)^2`. The oracle
//! evaluates that law exactly, draws outcomes from it and books the query cost
//! of every circuit it stands in for.

use crate::polyapprox::{
    gaussian_cosine_series, threshold_poly_with, ApproxError, BoundedPoly, BuildOptions, CosineSeries,
    GaussianPolyFamily, QueryCost, DEFAULT_MAX_DEGREE,
};
use crate::rng::Rng;
use crate::spectrum::{ModelDomain, SpectralMeasure};
use crate::stats;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("energy {energy} outside the domain of the approximant ({detail})")]
    DomainViolation { energy: f64, detail: String },
    #[error("backend {backend:?} cannot act on a spectrum in domain {domain}")]
    ModelMismatch { backend: Backend, domain: &'static str },
    #[error("normalization c = {c} below sup |g| = {sup}")]
    Normalization { c: f64, sup: f64 },
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// How operator functions are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Exact target functions, no query cost.
    Ideal,
    /// Certified Chebyshev polynomials through a `(2, m + 2, 0)` encoding.
    PolyBlockEncoding,
    /// Cosine series / compositions with `cos` through controlled evolutions.
    TrigEvolution,
}

impl Backend {
    pub fn tag(self) -> &'static str {
        match self {
            Backend::Ideal => "ideal",
            Backend::PolyBlockEncoding => "poly",
            Backend::TrigEvolution => "trig",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ideal" => Some(Backend::Ideal),
            "poly" => Some(Backend::PolyBlockEncoding),
            "trig" => Some(Backend::TrigEvolution),
            _ => None,
        }
    }
}

/// Function of `H` the circuit applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorFunction {
    /// `f_{a,b;eps}`: about one below `a`, about zero above `b`.
    Threshold { a: f64, b: f64, eps: f64 },
    /// `exp(-(x - center)^2 / (2 sigma^2))` to accuracy `eps`.
    Gaussian { sigma: f64, eps: f64, center: f64 },
}

/// Static description of an oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub backend: Backend,
    pub c: f64,
    pub m: u32,
    pub max_degree: usize,
}

impl OracleConfig {
    pub fn ideal() -> Self {
        Self { backend: Backend::Ideal, c: 1.0, m: 0, max_degree: DEFAULT_MAX_DEGREE }
    }

    /// Chebyshev backend; QSVT yields a `(2, m + 2, 0)` encoding.
    pub fn poly(m: u32) -> Self {
        Self { backend: Backend::PolyBlockEncoding, c: 2.0, m, max_degree: DEFAULT_MAX_DEGREE }
    }

    /// Time-evolution backend; QET-U yields a `(1, 1, 0)` encoding.
    pub fn trig() -> Self {
        Self { backend: Backend::TrigEvolution, c: 1.0, m: 1, max_degree: DEFAULT_MAX_DEGREE }
    }

    pub fn for_backend(backend: Backend) -> Self {
        match backend {
            Backend::Ideal => Self::ideal(),
            Backend::PolyBlockEncoding => Self::poly(1),
            Backend::TrigEvolution => Self::trig(),
        }
    }

    pub fn with_max_degree(mut self, max_degree: usize) -> Self {
        self.max_degree = max_degree;
        self
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions { max_degree: self.max_degree, ..Default::default() }
    }
}

/// Circuit bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub circuits: u64,
    pub queries_total: u64,
    /// Largest number of queries in a single circuit.
    pub max_depth: u64,
}

impl CostReport {
    pub fn merge(&self, other: &CostReport) -> CostReport {
        CostReport {
            circuits: self.circuits + other.circuits,
            queries_total: self.queries_total + other.queries_total,
            max_depth: self.max_depth.max(other.max_depth),
        }
    }

    pub fn record(&mut self, circuits: u64, cost: QueryCost) {
        if circuits == 0 {
            return;
        }
        self.circuits += circuits;
        self.queries_total += circuits * cost.queries;
        self.max_depth = self.max_depth.max(cost.queries);
    }
}

// Offset in the evolution-model threshold: u = sin(x - 1/2) = -cos(x + pi/2 - 1/2).
const EVOLUTION_SHIFT: f64 = 0.5;

/// A realized operator function.
#[derive(Debug, Clone)]
pub enum Approximant {
    IdealThreshold {
        a: f64,
        b: f64,
    },
    IdealGaussian {
        sigma: f64,
        center: f64,
    },
    Poly(BoundedPoly),
    /// `P(sin(x - 1/2))`, an even polynomial of degree `2 deg P` in `cos((x + phi)/2)`.
    EvolutionThreshold(BoundedPoly),
    Cosine {
        series: Arc<CosineSeries>,
        center: f64,
    },
}

impl Approximant {
    /// Value at energy `x`, checking the certified domain.
    pub fn eval(&self, x: f64) -> Result<f64, OracleError> {
        match self {
            Approximant::IdealThreshold { a, b } => Ok(if x <= 0.5 * (a + b) { 1.0 } else { 0.0 }),
            Approximant::IdealGaussian { sigma, center } => Ok((-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()),
            Approximant::Poly(p) => p.eval(x).map_err(|_| OracleError::DomainViolation {
                energy: x,
                detail: "polynomial is certified on [-1, 1]".into(),
            }),
            Approximant::EvolutionThreshold(p) => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(OracleError::DomainViolation {
                        energy: x,
                        detail: "evolution model needs [0, 1]".into(),
                    });
                }
                Ok(p.eval_unchecked((x - EVOLUTION_SHIFT).sin()))
            }
            Approximant::Cosine { series, center } => {
                if (x - center).abs() > PI {
                    return Err(OracleError::DomainViolation {
                        energy: x,
                        detail: format!("series is certified for |x - {center}| <= pi"),
                    });
                }
                Ok(series.eval(x - center))
            }
        }
    }

    pub fn query_cost(&self, m: u32) -> QueryCost {
        match self {
            Approximant::IdealThreshold { .. } | Approximant::IdealGaussian { .. } => QueryCost::FREE,
            Approximant::Poly(p) => p.query_cost(m),
            Approximant::EvolutionThreshold(p) => {
                QueryCost { queries: 2 * p.degree() as u64, ancillas: Some(1), evolution_time: Some(1.0) }
            }
            Approximant::Cosine { series, .. } => series.query_cost(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKey {
    Threshold { a: u64, b: u64, eps: u64, cap: usize },
    GaussFamily { sigma: u64, eps: u64, cap: usize },
    Cosine { sigma: u64, eps: u64 },
}

#[derive(Clone)]
enum Cached {
    Poly(BoundedPoly),
    Family(Arc<GaussianPolyFamily>),
    Cosine(Arc<CosineSeries>),
}

fn cache() -> &'static Mutex<HashMap<CacheKey, Cached>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Cached>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Construction is pure, so results are memoized process-wide.
fn cached<F: FnOnce() -> Result<Cached, ApproxError>>(key: CacheKey, build: F) -> Result<Cached, ApproxError> {
    if let Some(v) = cache().lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let v = build()?;
    cache().lock().expect("cache lock").insert(key, v.clone());
    Ok(v)
}

/// Certified Gaussian family for `(sigma, eps)`, shared across oracles.
pub fn gaussian_family(sigma: f64, eps: f64, max_degree: usize) -> Result<Arc<GaussianPolyFamily>, ApproxError> {
    let key = CacheKey::GaussFamily { sigma: sigma.to_bits(), eps: eps.to_bits(), cap: max_degree };
    match cached(key, || {
        GaussianPolyFamily::build(sigma, eps, BuildOptions { max_degree, ..Default::default() })
            .map(|f| Cached::Family(Arc::new(f)))
    })? {
        Cached::Family(f) => Ok(f),
        _ => unreachable!("key kind matches value kind"),
    }
}

/// Realizes `f` for `config` (no spectrum needed).
pub fn realize(config: &OracleConfig, f: OperatorFunction) -> Result<Approximant, OracleError> {
    let opts = config.build_options();
    match (config.backend, f) {
        (Backend::Ideal, OperatorFunction::Threshold { a, b, .. }) => Ok(Approximant::IdealThreshold { a, b }),
        (Backend::Ideal, OperatorFunction::Gaussian { sigma, center, .. }) => {
            Ok(Approximant::IdealGaussian { sigma, center })
        }
        (Backend::PolyBlockEncoding, OperatorFunction::Threshold { a, b, eps }) => {
            let key = CacheKey::Threshold { a: a.to_bits(), b: b.to_bits(), eps: eps.to_bits(), cap: opts.max_degree };
            match cached(key, || threshold_poly_with(a, b, eps, opts).map(Cached::Poly))? {
                Cached::Poly(p) => Ok(Approximant::Poly(p)),
                _ => unreachable!("key kind matches value kind"),
            }
        }
        (Backend::PolyBlockEncoding, OperatorFunction::Gaussian { sigma, eps, center }) => {
            if (center.abs() - (PI - 1.0)) > 0.0 {
                return Err(OracleError::DomainViolation {
                    energy: center,
                    detail: "Gaussian centre must satisfy |xi| <= pi - 1".into(),
                });
            }
            Ok(Approximant::Poly(gaussian_family(sigma, eps, opts.max_degree)?.at(center)))
        }
        (Backend::TrigEvolution, OperatorFunction::Threshold { a, b, eps }) => {
            let (ua, ub) = ((a - EVOLUTION_SHIFT).sin(), (b - EVOLUTION_SHIFT).sin());
            let key =
                CacheKey::Threshold { a: ua.to_bits(), b: ub.to_bits(), eps: eps.to_bits(), cap: opts.max_degree };
            match cached(key, || threshold_poly_with(ua, ub, eps, opts).map(Cached::Poly))? {
                Cached::Poly(p) => Ok(Approximant::EvolutionThreshold(p)),
                _ => unreachable!("key kind matches value kind"),
            }
        }
        (Backend::TrigEvolution, OperatorFunction::Gaussian { sigma, eps, center }) => {
            let key = CacheKey::Cosine { sigma: sigma.to_bits(), eps: eps.to_bits() };
            match cached(key, || gaussian_cosine_series(sigma, eps).map(|s| Cached::Cosine(Arc::new(s))))? {
                Cached::Cosine(series) => Ok(Approximant::Cosine { series, center }),
                _ => unreachable!("key kind matches value kind"),
            }
        }
    }
}

/// `c^-2 sum_j p_j g(E_j)^2`, clamped into `[0, 1]`.
pub fn success_probability(spec: &SpectralMeasure, g: &Approximant, c: f64) -> Result<f64, OracleError> {
    let mut s = 0.0;
    for (e, p) in spec.levels() {
        if p == 0.0 {
            continue;
        }
        let v = g.eval(e)?;
        if v.abs() > c + 1e-9 {
            return Err(OracleError::Normalization { c, sup: v.abs() });
        }
        s += p * v * v;
    }
    Ok((s / (c * c)).clamp(0.0, 1.0))
}

/// Measurement simulator with its own random stream and cost counters.
#[derive(Debug, Clone)]
pub struct AcceptanceOracle {
    config: OracleConfig,
    rng: Rng,
    report: CostReport,
}

impl AcceptanceOracle {
    pub fn new(config: OracleConfig, rng: Rng) -> Self {
        assert!(config.c >= 1.0, "normalization must be at least one");
        Self { config, rng, report: CostReport::default() }
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn c(&self) -> f64 {
        self.config.c
    }

    fn check_model(&self, spec: &SpectralMeasure) -> Result<(), OracleError> {
        let ok = match self.config.backend {
            Backend::Ideal => true,
            Backend::PolyBlockEncoding => spec.model_domain() == ModelDomain::BlockEncoding,
            Backend::TrigEvolution => spec.model_domain() == ModelDomain::Evolution,
        };
        if ok {
            Ok(())
        } else {
            Err(OracleError::ModelMismatch { backend: self.config.backend, domain: spec.model_domain().tag() })
        }
    }

    pub fn realize(&self, f: OperatorFunction) -> Result<Approximant, OracleError> {
        realize(&self.config, f)
    }

    /// Exact success probability of one circuit.
    pub fn accept_prob(&self, spec: &SpectralMeasure, f: OperatorFunction) -> Result<f64, OracleError> {
        self.check_model(spec)?;
        success_probability(spec, &self.realize(f)?, self.config.c)
    }

    /// Runs one circuit.
    pub fn sample_outcome(&mut self, spec: &SpectralMeasure, f: OperatorFunction) -> Result<bool, OracleError> {
        self.check_model(spec)?;
        let g = self.realize(f)?;
        let q = success_probability(spec, &g, self.config.c)?;
        self.report.record(1, g.query_cost(self.config.m));
        Ok(self.rng.random::<f64>() < q)
    }

    /// Runs `n` identical circuits and returns the number of successes.
    /// Equal in law to `n` calls of [`Self::sample_outcome`].
    pub fn sample_count(&mut self, spec: &SpectralMeasure, f: OperatorFunction, n: u64) -> Result<u64, OracleError> {
        self.check_model(spec)?;
        let g = self.realize(f)?;
        let q = success_probability(spec, &g, self.config.c)?;
        self.report.record(n, g.query_cost(self.config.m));
        Ok(stats::binomial(&mut self.rng, n, q))
    }

    /// Books `n` circuits of the given cost (for batched samplers).
    pub fn charge(&mut self, n: u64, cost: QueryCost) {
        self.report.record(n, cost);
    }

    pub fn rng_mut(&mut self) -> &mut Rng {
        &mut self.rng
    }

    pub fn run_report(&self) -> CostReport {
        self.report
    }

    pub fn reset_report(&mut self) {
        self.report = CostReport::default();
    }
}
