//! Spectral measures `p = sum_j p_j delta(x - E_j)` and their construction.
//!
//! Everything downstream only needs the pairs `(E_j, p_j)`; dense Hermitian
//! input is diagonalized once and reduced to such a measure.

mod dense;

pub use dense::{
    read_matrix_file, read_state_file, write_matrix_file, DenseHermitian, DEFAULT_HERMITIAN_TOL, MAX_DENSE_DIM,
};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Absolute tolerance on `sum_j p_j = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Minimal resolvable ground gap `E_1 - E_0`.
pub const MIN_GROUND_GAP: f64 = 1e-12;
/// Eigenvalues closer than this are merged when reducing a dense operator.
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("operator is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("state is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("ground level is degenerate: E1 - E0 = {gap:e}")]
    DegenerateGroundGap { gap: f64 },
    #[error("energy {energy} lies outside the model domain [{lo}, {hi}]")]
    DomainViolation { energy: f64, lo: f64, hi: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumViolation { sum: f64 },
    #[error("invalid weight {weight}")]
    InvalidWeight { weight: f64 },
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("energies and weights differ in length ({energies} vs {weights})")]
    LengthMismatch { energies: usize, weights: usize },
    #[error("dimension {dim} exceeds the dense limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpectrumError {
    fn from(e: std::io::Error) -> Self {
        SpectrumError::Io(e.to_string())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SpectrumError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SpectrumError::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Access model the spectrum is normalized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelDomain {
    /// Block-encoding access, spectrum in `[-1, 1]`.
    #[serde(rename = "pm1")]
    BlockEncoding,
    /// Controlled time evolution, spectrum in `[0, 1]`.
    #[serde(rename = "01")]
    Evolution,
}

impl ModelDomain {
    pub fn interval(self) -> Interval {
        match self {
            ModelDomain::BlockEncoding => Interval { lo: -1.0, hi: 1.0 },
            ModelDomain::Evolution => Interval { lo: 0.0, hi: 1.0 },
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ModelDomain::BlockEncoding => "pm1",
            ModelDomain::Evolution => "01",
        }
    }
}

/// Affine change of variables `x -> scale * x + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { scale: 1.0, shift: 0.0 };

    /// The increasing map sending `from` onto `to`.
    pub fn between(from: Interval, to: Interval) -> Self {
        let scale = to.width() / from.width();
        AffineMap { scale, shift: to.lo - scale * from.lo }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn invert(&self, y: f64) -> f64 {
        (y - self.shift) / self.scale
    }

    /// Accuracy needed in the mapped frame to reach `eps` in the original one.
    pub fn map_error(&self, eps: f64) -> f64 {
        eps * self.scale.abs()
    }

    /// Original-frame error corresponding to a mapped-frame error `eps`.
    pub fn unmap_error(&self, eps: f64) -> f64 {
        eps / self.scale.abs()
    }
}

/// Finite atomic spectral measure of a (Hamiltonian, state) pair.
///
/// Invariants: energies ascending and inside the model domain, weights in
/// `[0, 1]` summing to one, and a nondegenerate ground level `E_0 < E_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    model_domain: ModelDomain,
    energies: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip)]
    fingerprint: u64,
}

#[derive(Deserialize)]
struct RawMeasure {
    model_domain: ModelDomain,
    energies: Vec<f64>,
    weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for SpectralMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        SpectralMeasure::synth(raw.model_domain, &raw.energies, &raw.weights).map_err(serde::de::Error::custom)
    }
}

impl SpectralMeasure {
    /// Builds a measure from explicit levels. Pairs are sorted by energy.
    pub fn synth(domain: ModelDomain, energies: &[f64], weights: &[f64]) -> Result<Self, SpectrumError> {
        if energies.len() != weights.len() {
            return Err(SpectrumError::LengthMismatch { energies: energies.len(), weights: weights.len() });
        }
        if energies.is_empty() {
            return Err(SpectrumError::EmptySpectrum);
        }
        let dom = domain.interval();
        for &e in energies {
            if !e.is_finite() || !dom.contains(e) {
                return Err(SpectrumError::DomainViolation { energy: e, lo: dom.lo, hi: dom.hi });
            }
        }
        for &w in weights {
            if !(w.is_finite() && (0.0..=1.0).contains(&w)) {
                return Err(SpectrumError::InvalidWeight { weight: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(SpectrumError::WeightSumViolation { sum });
        }
        let mut pairs: Vec<(f64, f64)> = energies.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite energies"));
        if pairs.len() > 1 {
            let gap = pairs[1].0 - pairs[0].0;
            if gap <= MIN_GROUND_GAP {
                return Err(SpectrumError::DegenerateGroundGap { gap });
            }
        }
        let (energies, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let fingerprint = fingerprint(domain, &energies, &weights);
        Ok(Self { model_domain: domain, energies, weights, fingerprint })
    }

    /// Reduces a dense Hermitian operator and state to their spectral measure.
    pub fn from_dense(
        h: &DenseHermitian,
        psi: &[nalgebra::Complex<f64>],
        domain: ModelDomain,
    ) -> Result<Self, SpectrumError> {
        let (energies, weights) = h.spectral_pairs(psi)?;
        let mut e_out: Vec<f64> = Vec::new();
        let mut w_out: Vec<f64> = Vec::new();
        let mut cluster: Vec<f64> = Vec::new();
        let mut cluster_w = 0.0;
        for (e, w) in energies.into_iter().zip(weights) {
            if let Some(&last) = cluster.last() {
                if e - last > MERGE_TOL {
                    e_out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                    w_out.push(cluster_w);
                    cluster.clear();
                    cluster_w = 0.0;
                }
            }
            cluster.push(e);
            cluster_w += w;
        }
        e_out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
        w_out.push(cluster_w);
        let total: f64 = w_out.iter().sum();
        for w in &mut w_out {
            *w = (*w / total).clamp(0.0, 1.0);
        }
        Self::synth(domain, &e_out, &w_out)
    }

    pub fn model_domain(&self) -> ModelDomain {
        self.model_domain
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn levels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Overlap `p_0` of the state with the ground level.
    pub fn overlap0(&self) -> f64 {
        self.weights[0]
    }

    /// `E_1 - E_0`, or `None` for a single level.
    pub fn gap_true(&self) -> Option<f64> {
        (self.energies.len() > 1).then(|| self.energies[1] - self.energies[0])
    }

    /// Content hash, used to key cached acceptance profiles.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Maps the measure onto another model domain.
    pub fn rescale_to(&self, target: ModelDomain) -> Result<(SpectralMeasure, AffineMap), SpectrumError> {
        if target == self.model_domain {
            return Ok((self.clone(), AffineMap::IDENTITY));
        }
        let map = AffineMap::between(self.model_domain.interval(), target.interval());
        let t = target.interval();
        let energies: Vec<f64> = self.energies.iter().map(|&e| map.apply(e).clamp(t.lo, t.hi)).collect();
        Ok((Self::synth(target, &energies, &self.weights)?, map))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SpectrumError> {
        serde_json::from_str(s).map_err(|e| SpectrumError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SpectrumError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SpectrumError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn fingerprint(domain: ModelDomain, energies: &[f64], weights: &[f64]) -> u64 {
    // FNV-1a over the raw bits; stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(domain as u64);
    for (&e, &w) in energies.iter().zip(weights) {
        eat(e.to_bits());
        eat(w.to_bits());
    }
    h
}
