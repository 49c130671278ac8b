use super::HarnessError;
use crate::rng;
use crate::spectrum::{ModelDomain, SpectralMeasure};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Ground-state overlap of a generated spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P0 {
    Fixed(f64),
    /// `p_0 = k * eta`, for sweeps over the overlap promise.
    EtaMultiple(f64),
}

impl P0 {
    pub fn resolve(self, eta: Option<f64>) -> Result<f64, HarnessError> {
        let p = match (self, eta) {
            (P0::Fixed(p), _) => p,
            (P0::EtaMultiple(k), Some(eta)) => k * eta,
            (P0::EtaMultiple(_), None) => return Err(HarnessError::Config("p0 = k * eta needs eta".into())),
        };
        if p > 0.0 && p <= 1.0 {
            Ok(p)
        } else {
            Err(HarnessError::Config(format!("ground overlap {p} outside (0, 1]")))
        }
    }
}

/// Ground level a fifth of the way into the domain, first excited level
/// `gap` above it, the remaining `levels - 2` uniform on `[E_1, E_0 + 0.6 width]`.
/// Excited weights are `1 - p0` split by exponential draws, the first excited
/// level always carrying some.
pub fn random_levels(
    domain: ModelDomain,
    levels: usize,
    gap: f64,
    p0: f64,
    seed: u64,
) -> Result<SpectralMeasure, HarnessError> {
    if levels == 0 {
        return Err(HarnessError::Config("need at least one level".into()));
    }
    let dom = domain.interval();
    let e0 = dom.lo + 0.2 * dom.width();
    if levels == 1 {
        return Ok(SpectralMeasure::synth(domain, &[e0], &[1.0])?);
    }
    let top = e0 + 0.6 * dom.width();
    if !(gap > 0.0 && e0 + gap < top) {
        return Err(HarnessError::Config(format!("gap {gap} does not fit the domain")));
    }
    let mut r = rng::stream(seed, levels as u64, rng::lane::AUX);
    let mut energies = vec![e0, e0 + gap];
    let mut raw = vec![1.0 + r.random::<f64>()];
    for _ in 2..levels {
        energies.push(e0 + gap + (top - e0 - gap) * r.random::<f64>());
        raw.push(-(1.0 - r.random::<f64>()).ln());
    }
    let total: f64 = raw.iter().sum();
    let mut weights = vec![p0];
    weights.extend(raw.iter().map(|w| (1.0 - p0) * w / total));
    // Absorb rounding so the weights sum to one.
    let drift = 1.0 - weights.iter().sum::<f64>();
    weights[1] = (weights[1] + drift).max(0.0);
    Ok(SpectralMeasure::synth(domain, &energies, &weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_family_shape() {
        for n in [2, 8, 64, 256] {
            let s = random_levels(ModelDomain::BlockEncoding, n, 0.1, 0.4, 5).unwrap();
            assert_eq!(s.len(), n);
            assert!((s.gap_true().unwrap() - 0.1).abs() < 1e-12);
            assert_eq!(s.overlap0(), 0.4);
            assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(random_levels(ModelDomain::Evolution, 8, 0.1, 0.4, 5).unwrap().ground_energy(), 0.2);
    }
}
