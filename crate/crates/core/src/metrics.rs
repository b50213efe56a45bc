//! Fidelity and element-wise deviation between density matrices, and
//! success probability from histograms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::state::ShotHistogram;

/// Eigenvalues below `-PSD_TOLERANCE` reject an input as not positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub fidelity: f64,
    pub avg_abs_deviation: f64,
    pub max_abs_deviation: f64,
}

fn hermitian(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix with round-off noise removed: anything
/// below `dim · 8ε · max|λ|` (including all negatives) becomes 0. Square roots
/// would otherwise amplify 1e-16 noise into 1e-8 errors.
fn clamped_eigen(m: &DMatrix<Complex64>) -> (nalgebra::DVector<f64>, DMatrix<Complex64>) {
    let eig = hermitian(m).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let floor = m.nrows() as f64 * 8.0 * f64::EPSILON * scale;
    let values = eig.eigenvalues.map(|l| if l <= floor { 0.0 } else { l });
    (values, eig.eigenvectors)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (values, v) = clamped_eigen(m);
    let roots = values.map(|l| Complex64::new(l.sqrt(), 0.0));
    &v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

fn check_psd(rho: &DensityMatrix) -> Result<()> {
    let min = rho.eigenvalues().first().copied().unwrap_or(0.0);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Tr √(√ρ_T · ρ_E · √ρ_T), clamped to [0, 1].
pub fn fidelity(rho_t: &DensityMatrix, rho_e: &DensityMatrix) -> Result<f64> {
    if rho_t.dim() != rho_e.dim() {
        return Err(Error::DimensionMismatch(rho_t.dim(), rho_e.dim()));
    }
    check_psd(rho_t)?;
    check_psd(rho_e)?;
    let root = hermitian_sqrt(&rho_t.to_matrix());
    let inner = &root * rho_e.to_matrix() * &root;
    let f: f64 = clamped_eigen(&inner).0.iter().map(|l| l.sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Mean and maximum of |x^T_ij − x^E_ij| over all dim² entries (complex modulus).
pub fn abs_deviations(rho_t: &DensityMatrix, rho_e: &DensityMatrix) -> Result<(f64, f64)> {
    if rho_t.dim() != rho_e.dim() {
        return Err(Error::DimensionMismatch(rho_t.dim(), rho_e.dim()));
    }
    let diffs = rho_t
        .entries()
        .iter()
        .zip(rho_e.entries())
        .map(|(a, b)| (a - b).norm());
    let (sum, max) = diffs.fold((0.0, 0.0f64), |(s, m), d| (s + d, m.max(d)));
    Ok((sum / rho_t.entries().len() as f64, max))
}

pub fn compare(rho_t: &DensityMatrix, rho_e: &DensityMatrix) -> Result<MetricReport> {
    let fidelity = fidelity(rho_t, rho_e)?;
    let (avg_abs_deviation, max_abs_deviation) = abs_deviations(rho_t, rho_e)?;
    Ok(MetricReport {
        fidelity,
        avg_abs_deviation,
        max_abs_deviation,
    })
}

/// Fraction of shots that produced `expected`; 0 when it never occurred.
pub fn success_probability(hist: &ShotHistogram, expected: &str) -> Result<f64> {
    if expected.len() != hist.width() {
        return Err(Error::DimensionMismatch(expected.len(), hist.width()));
    }
    Ok(hist.count(expected) as f64 / hist.shots() as f64)
}
