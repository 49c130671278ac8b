//! Numerical checks of the analytic inequalities the estimators rely on.
//!
//! * Truncated Gaussian: with `w = 2 sigma sqrt(ln(e sigma / eps))` and
//!   `|s| <= w/2`, `int_{s-w}^{s+w} e^{-x^2/sigma^2} >= 1.12 sigma` and the
//!   first moment is at most `sigma eps / (2e)` in magnitude.
//! * Perturbed: any `g >= 0` within `0.03 eps / (sigma ln(e sigma / eps))` of
//!   the Gaussian keeps mass `>= sigma` and mean `<= 0.55 eps`. The worst `g`
//!   for the mean is found by Dinkelbach iteration (the optimum of a linear
//!   fractional objective over a box is a sign pattern split at one point).
//! * Window separation: `Delta - 3w/2 >= sigma sqrt(ln(0.5 c2^2 / eps2))` at the
//!   schedule defaults.
//! * Cosine series: coefficients sum to at most one and meet their accuracy.

use crate::gsee::{make_schedule, Branch};
use crate::polyapprox::gaussian_cosine_series;
use crate::quadrature::{integrate, QuadratureError};
use serde::Serialize;
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("{count} lemma violations, first: {first}")]
    LemmaViolation { count: usize, first: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    /// Parameter tuple, as `name=value` pairs.
    pub params: String,
    pub value: f64,
    pub bound: f64,
    /// `value >= bound` for lower bounds, `value <= bound` otherwise.
    pub lower: bool,
    /// Numerical error allowance of `value` (quadrature tolerance).
    pub slack: f64,
}

impl LemmaCheck {
    pub fn holds(&self) -> bool {
        if self.lower {
            self.value + self.slack >= self.bound
        } else {
            self.value - self.slack <= self.bound
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
    /// Distinct `(sigma, eps, s)` tuples of the truncated Gaussian sweep.
    pub gaussian_tuples: usize,
}

impl LemmaReport {
    pub fn violations(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.holds())
    }

    pub fn into_result(self) -> Result<Self, LemmaError> {
        let bad: Vec<_> = self.violations().collect();
        match bad.first() {
            None => Ok(self),
            Some(first) => Err(LemmaError::LemmaViolation {
                count: bad.len(),
                first: format!("{} at {}: {} vs {}", first.lemma, first.params, first.value, first.bound),
            }),
        }
    }
}

/// Half width `2 sigma sqrt(ln(e sigma / eps))`.
pub fn truncation_width(sigma: f64, eps: f64) -> f64 {
    2.0 * sigma * (E * sigma / eps).ln().sqrt()
}

/// Largest perturbation magnitude the noisy bound allows.
pub fn perturbation_bound(sigma: f64, eps: f64) -> f64 {
    0.03 * eps / (sigma * (E * sigma / eps).ln())
}

const TOL: f64 = 1e-13;

fn quad_tol(sigma: f64) -> f64 {
    TOL * sigma.max(1e-3)
}

fn gauss(sigma: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| (-(x / sigma).powi(2)).exp()
}

/// `int_a^b x^k e^{-x^2/sigma^2}` for `k` in `{0, 1}`.
fn moment(sigma: f64, k: i32, a: f64, b: f64) -> Result<f64, QuadratureError> {
    let g = gauss(sigma);
    integrate(|x| x.powi(k) * g(x), a, b, quad_tol(sigma))
}

/// Mass and first moment of the truncated Gaussian on `[s - w, s + w]`.
pub fn truncated_moments(sigma: f64, eps: f64, s: f64) -> Result<(f64, f64), QuadratureError> {
    let w = truncation_width(sigma, eps);
    let (a, b) = (s - w, s + w);
    let mid = 0.0f64.clamp(a, b);
    Ok((moment(sigma, 0, a, b)?, moment(sigma, 1, a, mid)? + moment(sigma, 1, mid, b)?))
}

/// `int x^k (e^{-x^2/sigma^2} + d(x))` over `[a, b]` with `d = h` where
/// `x > lambda` and `d = -min(h, gaussian)` elsewhere (times `sign`).
fn perturbed(sigma: f64, h: f64, lambda: f64, sign: f64, k: i32, a: f64, b: f64) -> Result<f64, QuadratureError> {
    let g = gauss(sigma);
    let mut cuts = vec![a, b, lambda.clamp(a, b), 0.0f64.clamp(a, b)];
    if h < 1.0 {
        let r = sigma * (1.0 / h).ln().sqrt();
        cuts.extend([(-r).clamp(a, b), r.clamp(a, b)]);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |x: f64| {
        let up = sign * (x - lambda) > 0.0;
        let d = if up { h } else { -h.min(g(x)) };
        x.powi(k) * (g(x) + d)
    };
    let mut total = 0.0;
    for p in cuts.windows(2) {
        if p[1] > p[0] {
            total += integrate(f, p[0], p[1], quad_tol(sigma))?;
        }
    }
    Ok(total)
}

/// Largest `|int x g| / int g` over admissible perturbations `g`, and the
/// smallest mass `int g`.
pub fn worst_perturbed(sigma: f64, eps: f64, s: f64) -> Result<(f64, f64), QuadratureError> {
    let w = truncation_width(sigma, eps);
    let h = perturbation_bound(sigma, eps);
    let (a, b) = (s - w, s + w);
    // Pushing all mass down (lambda beyond the window) minimizes the integral.
    let min_mass = perturbed(sigma, h, f64::INFINITY, 1.0, 0, a, b)?;
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        // Dinkelbach: lambda <- N(lambda) / D(lambda) with the sign pattern
        // split at lambda maximizes sign * ratio.
        let mut lambda = 0.0;
        for _ in 0..100 {
            let n = perturbed(sigma, h, lambda, sign, 1, a, b)?;
            let d = perturbed(sigma, h, lambda, sign, 0, a, b)?;
            let next = n / d;
            let done = (next - lambda).abs() <= 1e-15 * (1.0 + lambda.abs());
            lambda = next;
            if done {
                break;
            }
        }
        worst = worst.max(lambda.abs());
    }
    Ok((worst, min_mass))
}

/// `(sigma, eps, s)` grid: 4 widths, 5 accuracy ratios, 11 offsets.
pub fn gaussian_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for sigma in [0.01, 0.05, 0.2, 1.0] {
        for r in [1.0, 0.5, 0.1, 1e-2, 1e-3] {
            let eps = sigma * r;
            let w = truncation_width(sigma, eps);
            for i in 0..11 {
                out.push((sigma, eps, -0.5 * w + w * i as f64 / 10.0));
            }
        }
    }
    out
}

fn push(report: &mut LemmaReport, lemma: &'static str, params: String, value: f64, bound: f64, lower: bool) {
    report.checks.push(LemmaCheck { lemma, params, value, bound, lower, slack: 0.0 });
}

fn push_quad(
    report: &mut LemmaReport,
    lemma: &'static str,
    params: String,
    value: f64,
    bound: f64,
    lower: bool,
    slack: f64,
) {
    report.checks.push(LemmaCheck { lemma, params, value, bound, lower, slack });
}

/// Runs every check. Violations are recorded; use [`LemmaReport::into_result`]
/// to turn them into an error.
pub fn lemma_suite() -> Result<LemmaReport, LemmaError> {
    let mut report = LemmaReport::default();
    let grid = gaussian_grid();
    report.gaussian_tuples = grid.len();
    for &(sigma, eps, s) in &grid {
        let p = format!("sigma={sigma} eps={eps} s={s}");
        let (mass, first) = truncated_moments(sigma, eps, s)?;
        // Integrals carry absolute error at most `tol`; the mean ratio twice that over the mass.
        let tol = quad_tol(sigma);
        let rtol = 2.0 * tol / sigma;
        push_quad(&mut report, "truncated_mass", p.clone(), mass, 1.12 * sigma, true, tol);
        push_quad(&mut report, "truncated_first_moment", p.clone(), first.abs(), sigma * eps / (2.0 * E), false, tol);
        push_quad(&mut report, "truncated_mean", p.clone(), first.abs() / mass, eps / (2.24 * E), false, rtol);
        let (worst, min_mass) = worst_perturbed(sigma, eps, s)?;
        push_quad(&mut report, "perturbed_mass", p.clone(), min_mass, sigma, true, 6.0 * tol);
        push_quad(&mut report, "perturbed_mean", p, worst, 0.55 * eps, false, 6.0 * rtol);
    }
    separation_checks(&mut report);
    cosine_checks(&mut report);
    Ok(report)
}

/// Gap-to-window separation at the schedule defaults, over a parameter grid
/// and a grid of Gaussian centres covering every admissible coarse error.
fn separation_checks(report: &mut LemmaReport) {
    for gap in [0.05, 0.2, 0.5] {
        for ratio in [8.5, 20.0, 100.0, 1e3] {
            for eta in [0.05, 0.3, 1.0] {
                for c2 in [1.0, 2.0] {
                    let eps = gap / ratio;
                    let s = make_schedule(eps, 0.1, gap, eta, 1.0, 0, c2, 0).expect("grid is valid");
                    assert_eq!(s.branch, Branch::Refine);
                    let r = s.refinement.expect("refinement");
                    let required = r.sigma * (0.5 * c2 * c2 / r.eps2).ln().sqrt();
                    // E_0 = 0, E_1 = gap; coarse error u in [-w/2, w/2], xi in [u - w, u + w].
                    let mut margin = f64::INFINITY;
                    for i in 0..=20 {
                        let u = -0.5 * r.w + r.w * i as f64 / 20.0;
                        for j in 0..=20 {
                            let xi = u - r.w + 2.0 * r.w * j as f64 / 20.0;
                            margin = margin.min(gap - xi);
                        }
                    }
                    push(
                        report,
                        "window_separation",
                        format!("gap={gap} eps={eps} eta={eta} c2={c2}"),
                        margin,
                        required,
                        true,
                    );
                }
            }
        }
    }
}

fn cosine_checks(report: &mut LemmaReport) {
    for sigma in [0.05, 0.2, 0.6] {
        for eps in [1e-2, 1e-4, 1e-6] {
            let c = gaussian_cosine_series(sigma, eps).expect("valid parameters");
            let p = format!("sigma={sigma} eps={eps}");
            push(report, "cosine_coeff_sum", p.clone(), c.coeff_sum(), 1.0, false);
            push(report, "cosine_error", p, c.certified_error, eps, false);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tuple() {
        let (mass, first) = truncated_moments(0.2, 0.2, 0.0).unwrap();
        assert!(mass >= 1.12 * 0.2);
        assert!(first.abs() < 1e-14);
    }

    #[test]
    fn first_moment_closed_form() {
        let (sigma, eps, s) = (0.3, 0.01, 0.2);
        let w = truncation_width(sigma, eps);
        let (_, first) = truncated_moments(sigma, eps, s).unwrap();
        let closed = 0.5 * sigma * sigma * ((-((w - s) / sigma).powi(2)).exp() - (-((w + s) / sigma).powi(2)).exp());
        assert!((first - closed).abs() < 1e-10);
    }

    #[test]
    fn worst_case_beats_uniform_shift() {
        let (sigma, eps, s) = (0.2, 0.02, 0.1);
        let w = truncation_width(sigma, eps);
        let h = perturbation_bound(sigma, eps);
        let (worst, _) = worst_perturbed(sigma, eps, s).unwrap();
        // Lifting only the right half is one admissible perturbation.
        let g = gauss(sigma);
        let n = integrate(|x| x * (g(x) + if x > 0.0 { h } else { 0.0 }), s - w, s + w, 1e-13).unwrap();
        let d = integrate(|x| g(x) + if x > 0.0 { h } else { 0.0 }, s - w, s + w, 1e-13).unwrap();
        assert!(worst >= n / d - 1e-15);
        assert!(worst <= 0.55 * eps);
    }
}
