//! Small statistics helpers: sampling of count variables, regressions and the
//! Kolmogorov-Smirnov statistic.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

/// Draws `Binomial(n, p)`.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Number of failures before the `k`-th success of a Bernoulli(`p`) sequence,
/// drawn as a Gamma-Poisson mixture.
pub fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, k: u64, p: f64) -> u64 {
    if k == 0 || p >= 1.0 {
        return 0;
    }
    assert!(p > 0.0, "success probability must be positive");
    let scale = (1.0 - p) / p;
    let lambda = Gamma::new(k as f64, scale).expect("valid gamma").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng) as u64
}

/// Ordinary least squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    LineFit { slope, intercept, rss }
}

/// Best intercept for a line of fixed slope; returns the residual sum of squares.
pub fn fixed_slope_rss(x: &[f64], y: &[f64], slope: f64) -> f64 {
    let n = x.len() as f64;
    let c = x.iter().zip(y).map(|(a, b)| b - slope * a).sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (b - c - slope * a).powi(2)).sum()
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`,
/// with Stephens' finite-sample correction.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let k = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let sn = (n as f64).sqrt();
    k / (sn + 0.12 + 0.11 / sn)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
