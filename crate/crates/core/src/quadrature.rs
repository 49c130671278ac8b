//! Adaptive Gauss-Kronrod quadrature with interval halving.
//!
//! Used as the reference integrator for lemma checks, rejection constants and
//! the certification diagnostics. Infinite limits are handled by the
//! substitution `x = t / (1 - t^2)` on `(-1, 1)`.

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },
    #[error("invalid integration limits [{a}, {b}]")]
    InvalidLimits { a: f64, b: f64 },
}

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 2_000_000;

// 15-point Kronrod nodes (non-negative half) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One G7/K15 panel: returns (kronrod estimate, |kronrod - gauss|).
fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::of(2.0);
    let mid = (a + b) / T::of(2.0);
    let fc = f(mid);
    let mut k = fc * T::of(WGK[7]);
    let mut g = fc * T::of(WG[3]);
    for i in 0..7 {
        let dx = half * T::of(XGK[i]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * T::of(WGK[i]);
        if i % 2 == 1 {
            g = g + s * T::of(WG[i / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

struct State {
    evals: usize,
}

fn recurse<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: (T, T), tol: T, depth: u32, st: &mut State) -> (T, T) {
    let (est, err) = whole;
    if err <= tol || depth >= MAX_DEPTH || st.evals >= MAX_EVALS {
        return (est, err);
    }
    let m = (a + b) / T::of(2.0);
    if m <= a || m >= b {
        return (est, err);
    }
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    st.evals += 30;
    let half_tol = tol / T::of(2.0);
    let (l, le) = recurse(f, a, m, left, half_tol, depth + 1, st);
    let (r, re) = recurse(f, m, b, right, half_tol, depth + 1, st);
    (l + r, le + re)
}

/// Integrates `f` over `[a, b]` (either limit may be infinite) to absolute
/// tolerance `tol`. Returns the estimate, or `QuadratureFailure` when the
/// error estimate stays above `tol`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T, QuadratureError> {
    let (v, e) = integrate_with_error(&f, a, b, tol)?;
    if !(e <= tol) || !v.is_finite() {
        return Err(QuadratureError::QuadratureFailure {
            tol: tol.to_f64().unwrap_or(f64::NAN),
            estimate: v.to_f64().unwrap_or(f64::NAN),
            error: e.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(v)
}

/// Like [`integrate`] but always returns the estimate and its error bound.
pub fn integrate_with_error<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> Result<(T, T), QuadratureError> {
    if a.is_nan() || b.is_nan() {
        return Err(QuadratureError::InvalidLimits {
            a: a.to_f64().unwrap_or(f64::NAN),
            b: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    if a > b {
        let (v, e) = integrate_with_error(f, b, a, tol)?;
        return Ok((-v, e));
    }
    if a.is_finite() && b.is_finite() {
        return Ok(integrate_finite(f, a, b, tol));
    }
    integrate_infinite(f, a, b, tol)
}

fn integrate_finite<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> (T, T) {
    let mut st = State { evals: 0 };
    // Pre-split into panels so narrow features are not missed by the first rule.
    let panels = 16;
    let width = (b - a) / T::of(panels as f64);
    let mut total = (T::zero(), T::zero());
    for i in 0..panels {
        let lo = a + width * T::of(i as f64);
        let hi = if i + 1 == panels { b } else { lo + width };
        let whole = gk15(f, lo, hi);
        let (v, e) = recurse(f, lo, hi, whole, tol / T::of(panels as f64), 0, &mut st);
        total = (total.0 + v, total.1 + e);
    }
    total
}

fn integrate_infinite<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> Result<(T, T), QuadratureError> {
    // Map to a finite interval in t with x = t / (1 - t^2).
    let one = T::one();
    let to_t = |x: T| -> T {
        if x == T::infinity() {
            one
        } else if x == T::neg_infinity() {
            -one
        } else if x == T::zero() {
            T::zero()
        } else {
            // Solve x t^2 + t - x = 0 for the root in (-1, 1).
            (-one + (one + T::of(4.0) * x * x).sqrt()) / (T::of(2.0) * x)
        }
    };
    let g = |t: T| -> T {
        let d = one - t * t;
        if d <= T::zero() {
            return T::zero();
        }
        let x = t / d;
        let jac = (one + t * t) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    Ok(integrate_finite(&g, to_t(a), to_t(b), tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_real_line() {
        for &s in &[0.01, 0.3, 2.0] {
            let v = integrate(|x: f64| (-x * x / (s * s)).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-11).unwrap();
            let exact = s * std::f64::consts::PI.sqrt();
            assert!((v - exact).abs() < 1e-10, "{s}: {v} vs {exact}");
        }
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x: f64| x.sin(), 1.0, 0.0, 1e-12).unwrap();
        assert!((v + (1.0 - 1f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn narrow_peak_is_resolved() {
        let s = 1e-3;
        let v = integrate(|x: f64| (-(x - 0.37) * (x - 0.37) / (s * s)).exp(), -1.0, 1.0, 1e-13).unwrap();
        assert!((v - s * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_integrand_reports_failure() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300).powi(3), -1.0, 1.0, 1e-12);
        assert!(matches!(r, Err(QuadratureError::QuadratureFailure { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate(|x: f32| x.cos(), 0.0f32, 1.0f32, 1e-5).unwrap();
        assert!((v - 1f32.sin()).abs() < 1e-5);
    }
}
