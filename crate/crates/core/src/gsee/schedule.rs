use super::{hoeffding_rounds, GseeError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `eps >= gap / 8`: plain bisection at accuracy `eps`.
    Basic,
    /// Coarse bisection followed by Gaussian-window averaging.
    Refine,
}

/// Derived quantities of the refinement branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Operator Gaussian width; samples follow `p * N(0, sigma^2 / 2)`.
    pub sigma: f64,
    pub eps1: f64,
    /// Half width of the proposal window.
    pub w: f64,
    /// Accuracy of the Gaussian approximant.
    pub eps2: f64,
    /// Refinement circuits.
    pub trials: u64,
    pub coarse_eps: f64,
    pub coarse_delta: f64,
    /// `ln(e sigma / eps1)`.
    pub log_ratio: f64,
    /// Accepted-sample count the analysis relies on, `8 w^2 eps^-2 ln(6/delta)`.
    pub k_required: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GseeSchedule {
    pub eps: f64,
    pub delta: f64,
    pub gap: f64,
    pub eta: f64,
    pub c1: f64,
    pub m1: u32,
    pub c2: f64,
    pub m2: u32,
    pub branch: Branch,
    pub refinement: Option<Refinement>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), GseeError> {
    if cond {
        Ok(())
    } else {
        Err(GseeError::InvalidParameters(msg()))
    }
}

/// Parameter schedule of the refined estimator.
#[allow(clippy::too_many_arguments)]
pub fn make_schedule(
    eps: f64,
    delta: f64,
    gap: f64,
    eta: f64,
    c1: f64,
    m1: u32,
    c2: f64,
    m2: u32,
) -> Result<GseeSchedule, GseeError> {
    check(eps.is_finite() && eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    check(gap.is_finite() && gap > 0.0, || format!("gap must be positive, got {gap}"))?;
    check(delta > 0.0 && delta < 1.0, || format!("delta must lie in (0, 1), got {delta}"))?;
    check(eta > 0.0 && eta <= 1.0, || format!("eta must lie in (0, 1], got {eta}"))?;
    check(c1 >= 1.0, || format!("c1 must be at least 1, got {c1}"))?;
    check(c2 >= 1.0, || format!("c2 must be at least 1, got {c2}"))?;
    let mut s = GseeSchedule { eps, delta, gap, eta, c1, m1, c2, m2, branch: Branch::Basic, refinement: None };
    if eps >= gap / 8.0 {
        return Ok(s);
    }
    let sigma = gap / (5.0 * (1.0 + c2.ln()).sqrt() * (1.0 + (gap / (eta * eps)).ln()).sqrt());
    let eps1 = (eps / 1.1).min(sigma);
    let log_ratio = 1.0 + (sigma / eps1).ln();
    let w = 2.0 * sigma * log_ratio.sqrt();
    let eps2 = 0.0075 * eps1 * eta / (sigma * log_ratio);
    let inner = (2.0 * w * w / (eps * eps) * (6.0 / delta).ln()).max((3.0 / delta).ln());
    let trials = (32.0 * c2 * c2 / eta * log_ratio.sqrt() * inner).ceil();
    check(trials < u64::MAX as f64, || "refinement trial count overflows".into())?;
    s.branch = Branch::Refine;
    s.refinement = Some(Refinement {
        sigma,
        eps1,
        w,
        eps2,
        trials: trials as u64,
        coarse_eps: w / 2.0,
        coarse_delta: delta / 3.0,
        log_ratio,
        k_required: hoeffding_rounds(eps, w, delta)?,
    });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_goes_to_bisection() {
        let s = make_schedule(0.1 / 8.0, 0.1, 0.1, 0.5, 1.0, 0, 1.0, 0).unwrap();
        assert_eq!(s.branch, Branch::Basic);
        assert!(s.refinement.is_none());
    }

    #[test]
    fn rejects_subunit_normalization() {
        assert!(make_schedule(1e-3, 0.1, 0.5, 0.5, 1.0, 0, 0.5, 0).is_err());
        assert!(make_schedule(1e-3, 1.0, 0.5, 0.5, 1.0, 0, 1.0, 0).is_err());
    }
}
