//! Bounded polynomial and trigonometric approximants.
//!
//! Polynomials are built by Chebyshev interpolation of a smooth surrogate,
//! scaled by `(1 - eps/3)` so they stay bounded by one, and accepted only after
//! a dense grid sweep. The degree is found by doubling and then bisecting to
//! the smallest degree that certifies.

mod chebyshev;
mod cosine;

pub use chebyshev::{clenshaw, ChebyshevSeries};
pub use cosine::{cosine_sum, gaussian_cosine_series, CosineSeries};

use crate::spectrum::AffineMap;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::sync::Arc;
use thiserror::Error;

/// Equispaced points in the final certification sweep.
pub const CERT_GRID_POINTS: usize = 100_000;
/// Slack allowed on `|P| <= 1`.
pub const BOUND_SLACK: f64 = 1e-9;
/// Default cap on the polynomial degree.
pub const DEFAULT_MAX_DEGREE: usize = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("could not certify an approximant below degree {cap}")]
    DegreeCapExceeded { cap: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("argument {x} outside [-1, 1]")]
    DomainViolation { x: f64 },
    #[error("malformed approximant: {0}")]
    Parse(String),
}

/// Resource cost of one circuit built from an approximant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryCost {
    /// Queries to `U`/`U^dagger` or to controlled evolutions.
    pub queries: u64,
    /// Ancilla count `m + 2` for block-encoding circuits (metadata only).
    pub ancillas: Option<u32>,
    /// Evolution time per query for the time-evolution model.
    pub evolution_time: Option<f64>,
}

impl QueryCost {
    pub const FREE: QueryCost = QueryCost { queries: 0, ancillas: None, evolution_time: None };
}

/// What a [`BoundedPoly`] approximates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolyTarget {
    /// Smoothed step: near one on `[-1, a]`, near zero on `[b, 1]`.
    Threshold { a: f64, b: f64, eps: f64 },
    /// `exp(-(x - xi)^2 / (2 sigma^2))`.
    Gaussian { sigma: f64, eps: f64, xi: f64 },
}

/// Chebyshev polynomial `P(x) = S(scale * x + shift)` bounded by one on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedPoly {
    pub target: PolyTarget,
    series: Arc<ChebyshevSeries<f64>>,
    input: AffineMap,
    pub certified_error: f64,
    pub bound_ok: bool,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    basis: String,
    coefficients: Vec<f64>,
    certified_error: f64,
    degree: usize,
    bound_ok: bool,
    input_scale: f64,
    input_shift: f64,
    target: PolyTarget,
}

impl BoundedPoly {
    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.series.coeffs
    }

    /// Coefficients in `x` are those of `S` only when the input map is the identity.
    pub fn input_map(&self) -> AffineMap {
        self.input
    }

    pub fn eval(&self, x: f64) -> Result<f64, ApproxError> {
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&x) {
            return Err(ApproxError::DomainViolation { x });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the domain check (callers guarantee `|x| <= 1`).
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        self.series.eval(self.input.apply(x))
    }

    /// Lemma-style cost: `2d` queries and `m + 2` ancillas.
    pub fn query_cost(&self, m: u32) -> QueryCost {
        QueryCost { queries: 2 * self.degree() as u64, ancillas: Some(m + 2), evolution_time: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PolyJson {
            basis: "chebyshev".into(),
            coefficients: self.series.coeffs.clone(),
            certified_error: self.certified_error,
            degree: self.degree(),
            bound_ok: self.bound_ok,
            input_scale: self.input.scale,
            input_shift: self.input.shift,
            target: self.target,
        })
        .expect("poly serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ApproxError> {
        let p: PolyJson = serde_json::from_str(s).map_err(|e| ApproxError::Parse(e.to_string()))?;
        if p.basis != "chebyshev" {
            return Err(ApproxError::Parse(format!("unexpected basis '{}'", p.basis)));
        }
        Ok(Self {
            target: p.target,
            series: Arc::new(ChebyshevSeries::new(p.coefficients)),
            input: AffineMap { scale: p.input_scale, shift: p.input_shift },
            certified_error: p.certified_error,
            bound_ok: p.bound_ok,
        })
    }
}

/// Degree search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub max_degree: usize,
    pub grid_points: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { max_degree: DEFAULT_MAX_DEGREE, grid_points: CERT_GRID_POINTS }
    }
}

/// Equispaced grid on `[-1, 1]` plus extra points.
fn grid(points: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect();
    g.extend(extra.iter().copied().filter(|x| (-1.0..=1.0).contains(x)));
    g
}

/// Smallest certified degree: doubling, bisection on a coarse grid, then the
/// full sweep. `check` returns the certified error or `None` on failure.
fn search_degree<B, C>(
    build: B,
    check: C,
    extra: &[f64],
    opts: BuildOptions,
) -> Result<(ChebyshevSeries<f64>, f64), ApproxError>
where
    B: Fn(usize) -> ChebyshevSeries<f64>,
    C: Fn(&ChebyshevSeries<f64>, &[f64]) -> Option<f64>,
{
    let coarse = |n: usize| grid(10 * n + 2001, extra);
    let passes = |n: usize| -> bool {
        let s = build(n);
        check(&s, &coarse(n)).is_some()
    };
    let mut lo = 0usize;
    let mut hi = 8usize;
    loop {
        if hi > opts.max_degree {
            if lo < opts.max_degree && passes(opts.max_degree) {
                hi = opts.max_degree;
                break;
            }
            return Err(ApproxError::DegreeCapExceeded { cap: opts.max_degree });
        }
        if passes(hi) {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let fine = grid(opts.grid_points.max(10 * hi + 1), extra);
    let mut n = hi;
    loop {
        let s = build(n);
        if let Some(err) = check(&s, &fine) {
            return Ok((s, err));
        }
        if n >= opts.max_degree {
            return Err(ApproxError::DegreeCapExceeded { cap: opts.max_degree });
        }
        n = (n + n / 10 + 1).min(opts.max_degree);
    }
}

/// Steepness of the erfc surrogate so its value is within `eps/3` of the
/// step at distance `half_width` from the midpoint.
fn threshold_steepness(half_width: f64, eps: f64) -> f64 {
    erfc_inv(2.0 * eps / 3.0) / half_width
}

/// Polynomial with `P in [1 - eps, 1]` on `[-1, a]`, `|P| <= 1` on `[a, b]`
/// and `|P| <= eps` on `[b, 1]`.
pub fn threshold_poly(a: f64, b: f64, eps: f64) -> Result<BoundedPoly, ApproxError> {
    threshold_poly_with(a, b, eps, BuildOptions::default())
}

pub fn threshold_poly_with(a: f64, b: f64, eps: f64, opts: BuildOptions) -> Result<BoundedPoly, ApproxError> {
    if !(-1.0 < a && a < b && b < 1.0) {
        return Err(ApproxError::InvalidParameters(format!("need -1 < a < b < 1, got a={a}, b={b}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ApproxError::InvalidParameters(format!("eps must lie in (0, 1), got {eps}")));
    }
    let m = 0.5 * (a + b);
    let k = threshold_steepness(0.5 * (b - a), eps);
    let scale = 1.0 - eps / 3.0;
    let build = |n: usize| ChebyshevSeries::interpolate(|x: f64| 0.5 * erfc(k * (x - m)), n).scaled(scale);
    let check = |s: &ChebyshevSeries<f64>, g: &[f64]| -> Option<f64> {
        let mut worst = 0.0f64;
        for &x in g {
            let p = s.eval(x);
            if p.abs() > 1.0 + BOUND_SLACK {
                return None;
            }
            if x <= a {
                worst = worst.max(1.0 - p);
            } else if x >= b {
                worst = worst.max(p.abs());
            }
        }
        (worst <= eps).then_some(worst)
    };
    let (series, err) = search_degree(build, check, &[a, b, m], opts)?;
    Ok(BoundedPoly {
        target: PolyTarget::Threshold { a, b, eps },
        series: Arc::new(series),
        input: AffineMap::IDENTITY,
        certified_error: err,
        bound_ok: true,
    })
}

/// Certified `P_sigma` on `[-pi, pi]`; shifted copies give `g_{sigma, xi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolyFamily {
    pub sigma: f64,
    pub eps: f64,
    base: Arc<ChebyshevSeries<f64>>,
    pub certified_error: f64,
}

impl GaussianPolyFamily {
    pub fn build(sigma: f64, eps: f64, opts: BuildOptions) -> Result<Self, ApproxError> {
        if !(sigma > 0.0 && sigma < 1.0 && eps > 0.0 && eps < 1.0) {
            return Err(ApproxError::InvalidParameters(format!("need sigma, eps in (0, 1), got {sigma}, {eps}")));
        }
        let pi = std::f64::consts::PI;
        let target = move |t: f64| (-(pi * t) * (pi * t) / (2.0 * sigma * sigma)).exp();
        let scale = 1.0 - eps / 3.0;
        // The target is even: interpolate at an even count so the odd part vanishes.
        let build = |n: usize| ChebyshevSeries::interpolate(target, n + n % 2).scaled(scale);
        let check = |s: &ChebyshevSeries<f64>, g: &[f64]| -> Option<f64> {
            let mut worst = 0.0f64;
            for &t in g {
                let p = s.eval(t);
                if p.abs() > 1.0 + BOUND_SLACK {
                    return None;
                }
                worst = worst.max((p - target(t)).abs());
            }
            (worst <= eps).then_some(worst)
        };
        let (series, err) = search_degree(build, check, &[0.0], opts)?;
        Ok(Self { sigma, eps, base: Arc::new(series), certified_error: err })
    }

    pub fn degree(&self) -> usize {
        self.base.degree()
    }

    /// `x -> P_sigma(x - xi)`, valid for `x in [-1, 1]` and `|xi| <= pi - 1`.
    pub fn at(&self, xi: f64) -> BoundedPoly {
        let pi = std::f64::consts::PI;
        BoundedPoly {
            target: PolyTarget::Gaussian { sigma: self.sigma, eps: self.eps, xi },
            series: Arc::clone(&self.base),
            input: AffineMap { scale: 1.0 / pi, shift: -xi / pi },
            certified_error: self.certified_error,
            bound_ok: true,
        }
    }

    /// Evaluates `P_sigma(y)` for `y in [-pi, pi]`.
    pub fn eval_offset(&self, y: f64) -> f64 {
        self.base.eval(y / std::f64::consts::PI)
    }
}

/// `g_{sigma, xi}` with its error re-verified on the grid over `x in [-1, 1]`.
pub fn gaussian_poly(sigma: f64, eps: f64, xi: f64) -> Result<BoundedPoly, ApproxError> {
    gaussian_poly_with(sigma, eps, xi, BuildOptions::default())
}

pub fn gaussian_poly_with(sigma: f64, eps: f64, xi: f64, opts: BuildOptions) -> Result<BoundedPoly, ApproxError> {
    if !(-2.0..=2.0).contains(&xi) {
        return Err(ApproxError::InvalidParameters(format!("xi must lie in [-2, 2], got {xi}")));
    }
    let family = GaussianPolyFamily::build(sigma, eps, opts)?;
    let mut p = family.at(xi);
    let mut worst = 0.0f64;
    let mut bounded = true;
    for x in grid(opts.grid_points, &[xi]) {
        let v = p.eval_unchecked(x);
        bounded &= v.abs() <= 1.0 + BOUND_SLACK;
        worst = worst.max((v - (-(x - xi) * (x - xi) / (2.0 * sigma * sigma)).exp()).abs());
    }
    if !bounded || worst > eps {
        return Err(ApproxError::DegreeCapExceeded { cap: opts.max_degree });
    }
    p.certified_error = worst;
    p.bound_ok = bounded;
    Ok(p)
}
