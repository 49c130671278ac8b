//! Randomized certification of the constructed approximants against their
//! region specifications, on an independent grid.

use super::ApproxRow;
use crate::polyapprox::{
    gaussian_cosine_series, gaussian_poly_with, threshold_poly_with, BuildOptions, BOUND_SLACK, CERT_GRID_POINTS,
};
use crate::rng;
use rand::Rng as _;
use std::f64::consts::PI;

fn log_uniform(r: &mut rng::Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.random::<f64>()).exp()
}

fn grid(lo: f64, hi: f64, extra: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = CERT_GRID_POINTS;
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64).chain(extra.iter().copied())
}

/// Three rows per setting: a shifted Gaussian polynomial, a threshold
/// polynomial and a Gaussian cosine series, with parameters drawn from
/// stream `(master, trial)`.
pub fn approx_trial(master: u64, trial: u64, max_degree: usize) -> Vec<ApproxRow> {
    let mut r = rng::stream(master, trial, rng::lane::AUX);
    let opts = BuildOptions { max_degree, ..Default::default() };
    let mut rows = Vec::with_capacity(3);

    let sigma = log_uniform(&mut r, 0.05, 0.5);
    let eps = log_uniform(&mut r, 1e-6, 1e-2);
    let xi = r.random_range(-1.0..1.0);
    rows.push(match gaussian_poly_with(sigma, eps, xi, opts) {
        Ok(p) => {
            let target = |x: f64| (-(x - xi).powi(2) / (2.0 * sigma * sigma)).exp();
            let (mut err, mut sup) = (0.0f64, 0.0f64);
            for x in grid(-1.0, 1.0, &[xi.clamp(-1.0, 1.0)]) {
                let v = p.eval_unchecked(x);
                err = err.max((v - target(x)).abs());
                sup = sup.max(v.abs());
            }
            ApproxRow::new(trial, "gaussian_poly", sigma, eps, xi, p.degree(), p.certified_error, err, None)
                .check(err <= eps && sup <= 1.0 + BOUND_SLACK)
        }
        Err(e) => ApproxRow::failed(trial, "gaussian_poly", sigma, eps, xi, e.to_string()),
    });

    let a = r.random_range(-0.8..0.6);
    let b = a + r.random_range(0.05..0.3);
    let eps_t = log_uniform(&mut r, 1e-4, 0.1);
    rows.push(match threshold_poly_with(a, b, eps_t, opts) {
        Ok(p) => {
            let mut ok = true;
            let mut err = 0.0f64;
            for x in grid(-1.0, 1.0, &[a, b]) {
                let v = p.eval_unchecked(x);
                ok &= v.abs() <= 1.0 + BOUND_SLACK;
                if x <= a {
                    err = err.max(1.0 - v);
                    ok &= v >= 1.0 - eps_t;
                } else if x >= b {
                    err = err.max(v.abs());
                    ok &= v.abs() <= eps_t;
                }
            }
            ApproxRow::new(trial, "threshold_poly", a, eps_t, b, p.degree(), p.certified_error, err, None).check(ok)
        }
        Err(e) => ApproxRow::failed(trial, "threshold_poly", a, eps_t, b, e.to_string()),
    });

    let sigma_c = log_uniform(&mut r, 0.05, 0.8);
    let eps_c = log_uniform(&mut r, 1e-6, 1e-2);
    rows.push(match gaussian_cosine_series(sigma_c, eps_c) {
        Ok(c) => {
            let mut err = 0.0f64;
            for x in grid(-PI, PI, &[0.0]) {
                err = err.max((c.eval(x) - (-x * x / (2.0 * sigma_c * sigma_c)).exp()).abs());
            }
            let sum = c.coeff_sum();
            let nonneg = c.coeffs.iter().all(|a| *a >= 0.0);
            ApproxRow::new(
                trial,
                "cosine_series",
                sigma_c,
                eps_c,
                c.period,
                c.harmonics(),
                c.certified_error,
                err,
                Some(sum),
            )
            .check(err <= eps_c && sum <= 1.0 && nonneg)
        }
        Err(e) => ApproxRow::failed(trial, "cosine_series", sigma_c, eps_c, f64::NAN, e.to_string()),
    });
    rows
}
