//! Dense Hermitian operators and the textual/binary matrix file format.
//!
//! File layout: one header line `<n> <layout> complex-interleaved <encoding>`
//! where layout is `row-major` (matrix, n*n entries) or `vector` (state, n
//! entries) and encoding is `text` (whitespace separated `re im` pairs) or
//! `f64le` (raw little-endian doubles following the newline).

use super::{AffineMap, Interval, SpectrumError};
use nalgebra::{Complex, DMatrix, DVector};
use std::io::Write;
use std::path::Path;

/// Largest dimension accepted for full diagonalization (12 qubits).
pub const MAX_DENSE_DIM: usize = 4096;

/// Default entrywise Hermiticity tolerance.
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-10;

const STATE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    matrix: DMatrix<Complex<f64>>,
    tolerance: f64,
}

impl DenseHermitian {
    /// Builds from row-major entries, checking `max |A - A^dagger| <= tolerance`.
    /// The stored matrix is symmetrized.
    pub fn new(dim: usize, entries: &[Complex<f64>], tolerance: f64) -> Result<Self, SpectrumError> {
        if dim == 0 {
            return Err(SpectrumError::EmptySpectrum);
        }
        if dim > MAX_DENSE_DIM {
            return Err(SpectrumError::DimensionTooLarge { dim, max: MAX_DENSE_DIM });
        }
        if entries.len() != dim * dim {
            return Err(SpectrumError::Parse(format!("expected {} entries, got {}", dim * dim, entries.len())));
        }
        let a = DMatrix::from_row_slice(dim, dim, entries);
        let mut dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        if !(dev <= tolerance) {
            return Err(SpectrumError::NotHermitian { deviation: dev });
        }
        let matrix = (&a + a.adjoint()) * Complex::new(0.5, 0.0);
        Ok(Self { matrix, tolerance })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.matrix
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin_bounds(&self) -> Interval {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| self.matrix[(i, j)].norm()).sum();
            let d = self.matrix[(i, i)].re;
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        Interval { lo, hi }
    }

    /// Returns `s H + t I` mapping `bounds` (Gershgorin when absent) onto `target`.
    pub fn rescale_to(
        &self,
        bounds: Option<Interval>,
        target: Interval,
    ) -> Result<(DenseHermitian, AffineMap), SpectrumError> {
        let from = bounds.unwrap_or_else(|| self.gershgorin_bounds());
        let from = Interval::new(from.lo, from.hi)?;
        let map = AffineMap::between(from, target);
        let n = self.dim();
        let mut m = &self.matrix * Complex::new(map.scale, 0.0);
        for i in 0..n {
            m[(i, i)] += Complex::new(map.shift, 0.0);
        }
        Ok((DenseHermitian { matrix: m, tolerance: self.tolerance }, map))
    }

    /// Ascending eigenvalues with weights `|<v_j|psi>|^2` (no merging).
    pub fn spectral_pairs(&self, psi: &[Complex<f64>]) -> Result<(Vec<f64>, Vec<f64>), SpectrumError> {
        let n = self.dim();
        if psi.len() != n {
            return Err(SpectrumError::Parse(format!("state has length {}, expected {n}", psi.len())));
        }
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_NORM_TOL {
            return Err(SpectrumError::NotNormalized { norm_sq });
        }
        let eig = self.matrix.clone().symmetric_eigen();
        let v = DVector::from_column_slice(psi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let col = eig.eigenvectors.column(j);
                let amp = col.dotc(&v);
                (eig.eigenvalues[j], amp.norm_sqr())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        Ok(pairs.into_iter().unzip())
    }
}

enum Layout {
    Matrix,
    Vector,
}

fn parse_file(path: &Path, expect: Layout) -> Result<(usize, Vec<Complex<f64>>), SpectrumError> {
    let bytes = std::fs::read(path)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| SpectrumError::Parse("missing header".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| SpectrumError::Parse(e.to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[2] != "complex-interleaved" {
        return Err(SpectrumError::Parse(format!("bad header '{header}'")));
    }
    let n: usize = fields[0].parse().map_err(|_| SpectrumError::Parse(format!("bad dimension '{}'", fields[0])))?;
    let count = match (fields[1], expect) {
        ("row-major", Layout::Matrix) => n * n,
        ("vector", Layout::Vector) => n,
        (l, _) => return Err(SpectrumError::Parse(format!("unexpected layout '{l}'"))),
    };
    if n > MAX_DENSE_DIM {
        return Err(SpectrumError::DimensionTooLarge { dim: n, max: MAX_DENSE_DIM });
    }
    let body = &bytes[nl + 1..];
    let reals: Vec<f64> = match fields[3] {
        "text" => std::str::from_utf8(body)
            .map_err(|e| SpectrumError::Parse(e.to_string()))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| SpectrumError::Parse(format!("bad number '{t}'"))))
            .collect::<Result<_, _>>()?,
        "f64le" => {
            if body.len() % 8 != 0 {
                return Err(SpectrumError::Parse("binary body is not a whole number of doubles".into()));
            }
            body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        }
        e => return Err(SpectrumError::Parse(format!("unknown encoding '{e}'"))),
    };
    if reals.len() != 2 * count {
        return Err(SpectrumError::Parse(format!("expected {} reals, found {}", 2 * count, reals.len())));
    }
    Ok((n, reals.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect()))
}

pub fn read_matrix_file(path: &Path, tolerance: f64) -> Result<DenseHermitian, SpectrumError> {
    let (n, entries) = parse_file(path, Layout::Matrix)?;
    DenseHermitian::new(n, &entries, tolerance)
}

pub fn read_state_file(path: &Path) -> Result<Vec<Complex<f64>>, SpectrumError> {
    Ok(parse_file(path, Layout::Vector)?.1)
}

/// Writes row-major entries (`binary` selects `f64le`).
pub fn write_matrix_file(path: &Path, dim: usize, entries: &[Complex<f64>], binary: bool) -> Result<(), SpectrumError> {
    let layout = if entries.len() == dim * dim { "row-major" } else { "vector" };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{dim} {layout} complex-interleaved {}", if binary { "f64le" } else { "text" })?;
    for z in entries {
        if binary {
            f.write_all(&z.re.to_le_bytes())?;
            f.write_all(&z.im.to_le_bytes())?;
        } else {
            writeln!(f, "{:e} {:e}", z.re, z.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{ModelDomain, SpectralMeasure};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pauli_x_spectrum() {
        let h = DenseHermitian::new(2, &[c(0., 0.), c(0.5, 0.), c(0.5, 0.), c(0., 0.)], 1e-12).unwrap();
        let psi = [c(1.0, 0.0), c(0.0, 0.0)];
        let m = SpectralMeasure::from_dense(&h, &psi, ModelDomain::BlockEncoding).unwrap();
        assert!((m.energies()[0] + 0.5).abs() < 1e-12);
        assert!((m.weights()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_levels_merge() {
        let d = [c(-0.5, 0.), c(0., 0.), c(0., 0.), c(0., 0.), c(0.3, 0.), c(0., 0.), c(0., 0.), c(0., 0.), c(0.3, 0.)];
        let h = DenseHermitian::new(3, &d, 1e-12).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let m = SpectralMeasure::from_dense(&h, &[c(s, 0.), c(s, 0.), c(0., s)], ModelDomain::BlockEncoding).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.weights()[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_unnormalized() {
        let bad = [c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)];
        assert!(matches!(DenseHermitian::new(2, &bad, 1e-10), Err(SpectrumError::NotHermitian { .. })));
        let h = DenseHermitian::new(1, &[c(0.1, 0.)], 1e-10).unwrap();
        assert!(matches!(
            SpectralMeasure::from_dense(&h, &[c(0.9, 0.)], ModelDomain::BlockEncoding),
            Err(SpectrumError::NotNormalized { .. })
        ));
    }

    #[test]
    fn dense_rescale_maps_bounds() {
        let h = DenseHermitian::new(2, &[c(3., 0.), c(0., 0.), c(0., 0.), c(7., 0.)], 1e-12).unwrap();
        let (r, map) = h.rescale_to(None, Interval { lo: -1.0, hi: 1.0 }).unwrap();
        assert!((r.matrix()[(0, 0)].re + 1.0).abs() < 1e-12);
        assert!((r.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!((map.invert(0.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip_text_and_binary() {
        let dir = tempfile::tempdir().unwrap();
        let entries = [c(0.1, 0.), c(0.2, -0.3), c(0.2, 0.3), c(-0.4, 0.)];
        for binary in [false, true] {
            let p = dir.path().join(format!("h{binary}.mat"));
            write_matrix_file(&p, 2, &entries, binary).unwrap();
            let h = read_matrix_file(&p, 1e-12).unwrap();
            assert_eq!(h.matrix()[(0, 1)], c(0.2, -0.3));
            let s = dir.path().join(format!("s{binary}.vec"));
            write_matrix_file(&s, 2, &[c(0.6, 0.), c(0., 0.8)], binary).unwrap();
            assert_eq!(read_state_file(&s).unwrap()[1], c(0., 0.8));
        }
    }
}
