use super::families::{random_levels, P0};
use super::HarnessError;
use crate::gsee::ThresholdScaling;
use crate::oracle::{Backend, OracleConfig};
use crate::polyapprox::DEFAULT_MAX_DEGREE;
use crate::spectrum::{read_matrix_file, read_state_file, ModelDomain, SpectralMeasure, DEFAULT_HERMITIAN_TOL};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Tag mixed into every config hash; bump when results change for equal configs.
pub const VERSION_TAG: &str = concat!("gsee-lab/", env!("CARGO_PKG_VERSION"), "/results-1");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Basic,
    Adv,
    Cert,
    Approx,
    /// `adv` with the gap promise interpolated by `beta`.
    Sweep,
}

/// Where the spectral measure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecSource {
    /// JSON spectral measure.
    File {
        path: PathBuf,
    },
    /// Dense matrix and state files, rescaled into the model domain.
    Dense {
        matrix: PathBuf,
        state: PathBuf,
        domain: ModelDomain,
    },
    Synth {
        domain: ModelDomain,
        energies: Vec<f64>,
        weights: Vec<f64>,
    },
    /// `levels` random levels above a ground level, gap `gap`.
    Random {
        domain: ModelDomain,
        levels: usize,
        gap: f64,
        p0: P0,
        #[serde(default)]
        seed: u64,
    },
}

impl SpecSource {
    /// The measure for overlap promise `eta` (only `P0::EtaMultiple` uses it).
    pub fn build(&self, eta: Option<f64>) -> Result<SpectralMeasure, HarnessError> {
        Ok(match self {
            SpecSource::File { path } => SpectralMeasure::load(path)?,
            SpecSource::Dense { matrix, state, domain } => {
                let h = read_matrix_file(matrix, DEFAULT_HERMITIAN_TOL)?;
                let psi = read_state_file(state)?;
                let (h, _) = h.rescale_to(None, domain.interval())?;
                SpectralMeasure::from_dense(&h, &psi, *domain)?
            }
            SpecSource::Synth { domain, energies, weights } => SpectralMeasure::synth(*domain, energies, weights)?,
            SpecSource::Random { domain, levels, gap, p0, seed } => {
                random_levels(*domain, *levels, *gap, p0.resolve(eta)?, *seed)?
            }
        })
    }

    pub fn depends_on_eta(&self) -> bool {
        matches!(self, SpecSource::Random { p0: P0::EtaMultiple(_), .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend: Backend,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
}

fn default_m() -> u32 {
    1
}

fn default_max_degree() -> usize {
    DEFAULT_MAX_DEGREE
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { backend: Backend::Ideal, m: default_m(), max_degree: default_max_degree() }
    }
}

impl BackendConfig {
    pub fn oracle(&self) -> OracleConfig {
        let mut c = OracleConfig::for_backend(self.backend).with_max_degree(self.max_degree);
        if self.backend == Backend::PolyBlockEncoding {
            c.m = self.m;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stem: String,
}

fn default_delta() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

/// One experiment: a spectrum, an algorithm and a parameter grid.
///
/// The grid is the product of the non-empty lists. An empty `gap` means the
/// true gap, an empty `eta` means `p_0 / 2`, an empty `sigma` (certification)
/// means `sigma_scale * gap / (10 sqrt(ln(2 / (eta eps))))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    pub spec: SpecSource,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub gap: Vec<f64>,
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default = "one")]
    pub sigma_scale: f64,
    /// Certification candidate offset `E_hat - E_0`, in units of sigma.
    #[serde(default)]
    pub e_hat_offset: f64,
    /// Absolute certification candidate; overrides `e_hat_offset`.
    #[serde(default)]
    pub e_hat: Option<f64>,
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub scaling: ThresholdScaling,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(e.to_string()))?;
        Self::from_json(&s)
    }

    /// SHA-256 over the version tag and every result-affecting field.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let mut h = Sha256::new();
        h.update(VERSION_TAG.as_bytes());
        h.update(serde_json::to_vec(&c).expect("config serializes"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every grid value against the preconditions of its algorithm.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let positive = |name: &str, xs: &[f64]| -> Result<(), HarnessError> {
            match xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                Some(x) => Err(HarnessError::Config(format!("{name} values must be positive, got {x}"))),
                None => Ok(()),
            }
        };
        positive("eps", &self.eps)?;
        positive("gap", &self.gap)?;
        positive("sigma", &self.sigma)?;
        if let Some(e) = self.eta.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("eta values must lie in (0, 1], got {e}"));
        }
        if let Some(b) = self.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return bad(format!("beta values must lie in [0, 1], got {b}"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.sigma_scale > 0.0) {
            return bad("sigma_scale must be positive".into());
        }
        match self.algorithm {
            Algorithm::Approx => {}
            _ if self.eps.is_empty() => return bad("eps grid is empty".into()),
            Algorithm::Sweep if self.beta.is_empty() => return bad("sweep needs a beta grid".into()),
            Algorithm::Sweep if !self.gap.is_empty() => return bad("sweep derives the gap from beta".into()),
            _ => {}
        }
        if self.algorithm != Algorithm::Approx {
            if self.spec.depends_on_eta() && self.eta.is_empty() {
                return bad("an eta-dependent spectrum needs an eta grid".into());
            }
            let probe = self.spec.build(self.eta.first().copied())?;
            if let Some(e) = self.eta.iter().find(|e| !self.spec.depends_on_eta() && **e > probe.overlap0()) {
                return bad(format!("eta = {e} exceeds the ground overlap {}", probe.overlap0()));
            }
            let needs_true_gap = match self.algorithm {
                Algorithm::Basic | Algorithm::Approx => false,
                Algorithm::Adv => self.gap.is_empty(),
                Algorithm::Sweep => true,
                Algorithm::Cert => self.sigma.is_empty() && self.gap.is_empty(),
            };
            if needs_true_gap && probe.gap_true().is_none() {
                return bad("the gap must be given for a single-level spectrum".into());
            }
            if self.algorithm == Algorithm::Basic && !self.gap.is_empty() {
                return bad("basic does not use a gap".into());
            }
        }
        Ok(())
    }
}
