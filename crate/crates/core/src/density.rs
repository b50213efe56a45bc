//! Density matrices and their file format.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{extract_bits, StateVector, TOLERANCE};

/// Hermitian, unit-trace matrix over `dim = 2^q` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    /// Row-major.
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// Checks Hermiticity and trace within [`TOLERANCE`].
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(dim, entries, TOLERANCE)
    }

    /// As [`DensityMatrix::new`] with a caller-chosen tolerance, for measured data.
    pub fn with_tolerance(dim: usize, entries: Vec<Complex64>, tol: f64) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(entries.len(), dim * dim));
        }
        if let Some(bad) = entries
            .iter()
            .find(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Format(format!("non-finite entry {bad}")));
        }
        let dm = Self { dim, entries };
        let herm = dm.hermitian_deviation();
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = dm.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        Ok(dm)
    }

    /// |ψ⟩⟨ψ|.
    pub fn from_state(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            entries.extend(a.iter().map(|ak| a[j] * ak.conj()));
        }
        Self { dim, entries }
    }

    /// Maximally mixed state I/dim.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubit_count(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest |ρ_jk − conj(ρ_kj)|.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim {
            for k in j..self.dim {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    /// Eigenvalues in ascending order (input symmetrized first).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Reduced state on `keep`; `keep[0]` becomes qubit 0 of the result.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let q = self.qubit_count();
        for (k, &b) in keep.iter().enumerate() {
            if b >= q {
                return Err(Error::QubitOutOfRange {
                    index: b,
                    qubit_count: q,
                });
            }
            if keep[..k].contains(&b) {
                return Err(Error::DuplicateQubit(b));
            }
        }
        let traced: Vec<usize> = (0..q).filter(|b| !keep.contains(b)).collect();
        let keep_mask: usize = keep.iter().map(|b| 1 << b).sum();
        let rdim = 1usize << keep.len();
        let mut out = vec![Complex64::new(0.0, 0.0); rdim * rdim];
        // Sum over equal environment indices: ρ_red[a][b] = Σ_e ρ[(a,e)][(b,e)].
        for env in 0..(1usize << traced.len()) {
            let env_bits = traced
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &b)| acc | (((env >> k) & 1) << b));
            for row in 0..self.dim {
                if row & !keep_mask != env_bits {
                    continue;
                }
                let a = extract_bits(row, keep);
                for col in 0..self.dim {
                    if col & !keep_mask != env_bits {
                        continue;
                    }
                    out[a * rdim + extract_bits(col, keep)] += self.get(row, col);
                }
            }
        }
        Ok(DensityMatrix {
            dim: rdim,
            entries: out,
        })
    }

    pub fn to_file_format(&self) -> DensityFile {
        DensityFile {
            dim: self.dim,
            entries: self.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// On-disk form: `{"dim": D, "entries": [[re, im], ...]}` with D² pairs in
/// row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

/// Tolerance used when reading matrices from files (measured data are rounded).
pub const FILE_TOLERANCE: f64 = 1e-6;

impl DensityFile {
    pub fn parse(text: &str) -> Result<DensityMatrix> {
        let file: DensityFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_matrix()
    }

    pub fn into_matrix(self) -> Result<DensityMatrix> {
        let entries = self
            .entries
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        DensityMatrix::with_tolerance(self.dim, entries, FILE_TOLERANCE)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateOp;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_matrix(dm: &DensityMatrix, expected: &[Complex64]) {
        assert_eq!(dm.entries().len(), expected.len());
        for (a, e) in dm.entries().iter().zip(expected) {
            assert_abs_diff_eq!(a.re, e.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, e.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn outer_products() {
        let zero = StateVector::new_basis_state(1, 0).unwrap();
        assert_matrix(
            &DensityMatrix::from_state(&zero),
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );

        let mut plus = zero.clone();
        plus.apply_gate(&GateOp::h(0)).unwrap();
        assert_matrix(&DensityMatrix::from_state(&plus), &[c(0.5, 0.0); 4]);

        // (|0⟩ + i|1⟩)/√2: ρ01 = a0·conj(a1) = -i/2, ρ10 = +i/2.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus_i = StateVector::from_amplitudes(vec![c(s, 0.0), c(0.0, s)]).unwrap();
        let dm = DensityMatrix::from_state(&plus_i);
        assert_matrix(&dm, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]);
        assert_abs_diff_eq!(dm.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_traces() {
        let zz = DensityMatrix::from_state(&StateVector::new_basis_state(2, 0).unwrap());
        let r = zz.partial_trace(&[0]).unwrap();
        assert_matrix(&r, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let mut bell = StateVector::new_basis_state(2, 0).unwrap();
        bell.apply_gate(&GateOp::h(0)).unwrap();
        bell.apply_gate(&GateOp::cnot(0, 1).unwrap()).unwrap();
        let dm = DensityMatrix::from_state(&bell);
        let half = [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
        assert_matrix(&dm.partial_trace(&[0]).unwrap(), &half);
        assert_matrix(&dm.partial_trace(&[1]).unwrap(), &half);

        assert_eq!(dm.partial_trace(&[0, 1]).unwrap(), dm);
        assert_eq!(dm.partial_trace(&[]), Err(Error::EmptyRegister));
        assert!(dm.partial_trace(&[2]).is_err());
    }

    #[test]
    fn partial_trace_reorders_kept_qubits() {
        // |q1 q0⟩ = |10⟩; keeping [1, 0] swaps roles, so the reduced state is |01⟩.
        let dm = DensityMatrix::from_state(&StateVector::new_basis_state(2, 2).unwrap());
        let r = dm.partial_trace(&[1, 0]).unwrap();
        assert_abs_diff_eq!(r.get(1, 1).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            DensityMatrix::new(2, vec![c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::NotHermitian(_))
        ));
        assert!(matches!(
            DensityMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            Err(Error::InvalidTrace(_))
        ));
        assert_eq!(DensityMatrix::new(3, vec![]), Err(Error::NotPowerOfTwo(3)));
    }

    #[test]
    fn eigenvalues_of_mixed_state() {
        let ev = DensityMatrix::maximally_mixed(4).unwrap().eigenvalues();
        for e in ev {
            assert_abs_diff_eq!(e, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn file_format() {
        let text = r#"{"dim": 2, "entries": [[0.5, 0], [0, -0.5], [0, 0.5], [0.5, 0]]}"#;
        let dm = DensityFile::parse(text).unwrap();
        assert_eq!(dm.get(0, 1), c(0.0, -0.5));
        assert_eq!(
            DensityFile::parse(&dm.to_file_format().to_json()).unwrap(),
            dm
        );
        assert!(DensityFile::parse(r#"{"dim": 2, "entries": [[1, 0]]}"#).is_err());
    }
}
