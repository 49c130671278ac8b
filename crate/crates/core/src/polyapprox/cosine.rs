//! Cosine series for the Gaussian in the time-evolution model.
//!
//! Periodizing `exp(-x^2/(2 sigma^2))` with period `T` and truncating the
//! Fourier series at harmonic `N` gives nonnegative coefficients
//! `a_j = 2/T (1 - eps/3) g_hat(j/T)` (and half that for `j = 0`).

use super::{ApproxError, QueryCost, BOUND_SLACK, CERT_GRID_POINTS};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `sum_j a_j cos(j theta)` via Clenshaw in `cos(theta)`.
pub fn cosine_sum<T: Scalar>(coeffs: &[T], theta: T) -> T {
    super::clenshaw(coeffs, theta.cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    pub sigma: f64,
    pub eps: f64,
    pub period: f64,
    pub coeffs: Vec<f64>,
    pub certified_error: f64,
}

impl CosineSeries {
    /// Highest harmonic `N`.
    pub fn harmonics(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `sum_j a_j cos(2 pi j x / T)`, any real `x`.
    pub fn eval(&self, x: f64) -> f64 {
        cosine_sum(&self.coeffs, 2.0 * PI * x / self.period)
    }

    /// Degree `2N` in `cos(pi x / T)`, one controlled evolution of time `2 pi / T` per unit degree.
    pub fn query_cost(&self) -> QueryCost {
        QueryCost { queries: 2 * self.harmonics() as u64, ancillas: None, evolution_time: Some(2.0 * PI / self.period) }
    }

    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "basis": "cosine",
            "coefficients": self.coeffs,
            "certified_error": self.certified_error,
            "degree": 2 * self.harmonics(),
            "period": self.period,
            "sigma": self.sigma,
            "eps": self.eps,
        })
        .to_string()
    }

    pub fn from_json(s: &str) -> Result<Self, ApproxError> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| ApproxError::Parse(e.to_string()))?;
        if v["basis"] != "cosine" {
            return Err(ApproxError::Parse("expected cosine basis".into()));
        }
        let num = |k: &str| v[k].as_f64().ok_or_else(|| ApproxError::Parse(format!("missing '{k}'")));
        let coeffs =
            serde_json::from_value(v["coefficients"].clone()).map_err(|e| ApproxError::Parse(e.to_string()))?;
        Ok(Self {
            sigma: num("sigma")?,
            eps: num("eps")?,
            period: num("period")?,
            coeffs,
            certified_error: num("certified_error")?,
        })
    }
}

/// Fourier transform of `exp(-x^2/(2 sigma^2))`.
fn g_hat(sigma: f64, xi: f64) -> f64 {
    (2.0 * PI).sqrt() * sigma * (-2.0 * PI * PI * sigma * sigma * xi * xi).exp()
}

/// Period: `max(2 pi, sigma sqrt(8 ln(24/eps)))`. With this choice the
/// aliasing term `2 e^{-T^2/(8 sigma^2)} / (1 - e^{-T^2/sigma^2})` is at most `eps/6`.
pub fn cosine_period(sigma: f64, eps: f64) -> f64 {
    (2.0 * PI).max(sigma * (8.0 * (24.0 / eps).ln()).sqrt())
}

/// Smallest `N` with `exp(-2 pi^2 sigma^2 N^2 / T^2) <= eps/6`.
pub fn cosine_harmonics(sigma: f64, eps: f64, period: f64) -> usize {
    let bound = (6.0 / eps).ln();
    let mut n = (period * (bound / 2.0).sqrt() / (PI * sigma)).ceil().max(0.0) as usize;
    // Guard against rounding in either direction.
    let ok = |n: usize| -2.0 * PI * PI * sigma * sigma * (n * n) as f64 / (period * period) <= -bound;
    while n > 0 && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    n
}

pub fn gaussian_cosine_series(sigma: f64, eps: f64) -> Result<CosineSeries, ApproxError> {
    if !(sigma > 0.0 && sigma < 1.0 && eps > 0.0 && eps < 1.0) {
        return Err(ApproxError::InvalidParameters(format!("need sigma, eps in (0, 1), got {sigma}, {eps}")));
    }
    let period = cosine_period(sigma, eps);
    let n = cosine_harmonics(sigma, eps, period);
    let s = 1.0 - eps / 3.0;
    let coeffs: Vec<f64> = (0..=n)
        .map(|j| {
            let w = if j == 0 { 1.0 } else { 2.0 };
            w * s * g_hat(sigma, j as f64 / period) / period
        })
        .collect();
    let mut series = CosineSeries { sigma, eps, period, coeffs, certified_error: f64::NAN };
    let mut worst = 0.0f64;
    for i in 0..CERT_GRID_POINTS {
        let x = -PI + 2.0 * PI * i as f64 / (CERT_GRID_POINTS - 1) as f64;
        let v = series.eval(x);
        if v.abs() > 1.0 + BOUND_SLACK {
            return Err(ApproxError::InvalidParameters(format!("series exceeds one at x={x}")));
        }
        worst = worst.max((v - (-x * x / (2.0 * sigma * sigma)).exp()).abs());
    }
    if worst > eps {
        return Err(ApproxError::InvalidParameters(format!("series error {worst:e} above eps {eps:e}")));
    }
    series.certified_error = worst;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_positive_and_sum_below_one() {
        let s = gaussian_cosine_series(0.05, 1e-4).unwrap();
        assert!(s.coeffs.iter().all(|&a| a > 0.0));
        assert!(s.coeff_sum() <= 1.0);
        assert!(s.certified_error <= 1e-4);
    }

    #[test]
    fn value_at_origin() {
        let s = gaussian_cosine_series(0.2, 1e-3).unwrap();
        assert!((s.eval(0.0) - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn aliasing_bound_meets_budget() {
        for &(sigma, eps) in &[(0.9, 1e-6), (0.5, 1e-3), (0.05, 1e-8)] {
            let t = cosine_period(sigma, eps);
            let r = t * t / (sigma * sigma);
            let bound = 2.0 * (-r / 8.0).exp() / (1.0 - (-r).exp());
            assert!(bound <= eps / 6.0 * (1.0 + 1e-12), "{sigma} {eps}: {bound}");
        }
    }

    #[test]
    fn harmonics_are_minimal() {
        let (sigma, eps) = (0.1, 1e-5);
        let t = cosine_period(sigma, eps);
        let n = cosine_harmonics(sigma, eps, t) as f64;
        let f = |n: f64| (-2.0 * PI * PI * sigma * sigma * n * n / (t * t)).exp();
        assert!(f(n) <= eps / 6.0);
        assert!(f(n - 1.0) > eps / 6.0);
    }

    #[test]
    fn cost_counts_harmonics() {
        let s = gaussian_cosine_series(0.3, 1e-2).unwrap();
        let c = s.query_cost();
        assert_eq!(c.queries, 2 * s.harmonics() as u64);
        assert!((c.evolution_time.unwrap() - 2.0 * PI / s.period).abs() < 1e-15);
        let empty = CosineSeries { coeffs: vec![0.5], ..s };
        assert_eq!(empty.query_cost().queries, 0);
    }

    #[test]
    fn json_round_trip() {
        let s = gaussian_cosine_series(0.3, 1e-2).unwrap();
        assert_eq!(CosineSeries::from_json(&s.to_json()).unwrap(), s);
    }
}
