//! Chebyshev series of the first kind on `[-1, 1]`.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// `sum_k c_k T_k(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> ChebyshevSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, t: T) -> T {
        clenshaw(&self.coeffs, t)
    }

    /// Interpolates `f` at the `n + 1` Chebyshev points of the first kind.
    pub fn interpolate<F: Fn(T) -> T>(f: F, degree: usize) -> Self {
        let n = degree + 1;
        let pi = T::PI();
        let nt = T::of(n as f64);
        let values: Vec<T> = (0..n).map(|j| f((pi * (T::of(j as f64) + T::of(0.5)) / nt).cos())).collect();
        // cos(k * theta_j) = cos(pi * k * (2j + 1) / (2n)); tabulate on 4n points.
        let table: Vec<T> = (0..4 * n).map(|m| (pi * T::of(m as f64) / T::of(2.0 * n as f64)).cos()).collect();
        let two_over_n = T::of(2.0) / nt;
        let mut coeffs: Vec<T> = (0..n)
            .map(|k| {
                let mut s = T::zero();
                for (j, &v) in values.iter().enumerate() {
                    s = s + v * table[(k * (2 * j + 1)) % (4 * n)];
                }
                s * two_over_n
            })
            .collect();
        coeffs[0] = coeffs[0] / T::of(2.0);
        Self { coeffs }
    }

    /// Series scaled by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// Antiderivative vanishing at `t = -1`.
    pub fn integral(&self) -> Self {
        let n = self.coeffs.len();
        let c = |k: usize| if k < n { self.coeffs[k] } else { T::zero() };
        let mut out = vec![T::zero(); n + 1];
        // integral of T_k = T_{k+1}/(2(k+1)) - T_{k-1}/(2(k-1)), with T_0 -> T_1 and T_1 -> T_2/4.
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            let lower = if k == 1 { c(0) * T::of(2.0) } else { c(k - 1) };
            *o = (lower - c(k + 1)) / T::of(2.0 * k as f64);
        }
        let mut series = Self { coeffs: out };
        let at_minus_one = series.eval(-T::one());
        series.coeffs[0] = series.coeffs[0] - at_minus_one;
        series
    }

    /// Largest absolute coefficient among the last `tail` ones.
    pub fn tail_magnitude(&self, tail: usize) -> T {
        self.coeffs.iter().rev().take(tail).fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

/// Clenshaw recurrence for `sum_k c_k T_k(t)`.
pub fn clenshaw<T: Scalar>(coeffs: &[T], t: T) -> T {
    if coeffs.is_empty() {
        return T::zero();
    }
    let two_t = t + t;
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + two_t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + t * b1 - b2
}
