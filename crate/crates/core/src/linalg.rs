//! Dense complex eigendecomposition via the complex Schur form.

use nalgebra::{DMatrix, Schur};
use thiserror::Error;

use crate::C64;

/// Eigenbases with `‖V‖₁‖V⁻¹‖₁` above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Schur decomposition did not converge")]
    NoConvergence,
    #[error("eigenbasis is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
}

/// `A = V diag(λ) V⁻¹`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    /// `‖V‖₁ ‖V⁻¹‖₁`
    pub condition: f64,
}

pub fn is_finite(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvalues only (diagonal of the Schur form), unordered.
pub fn eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>, LinalgError> {
    if !is_finite(a) {
        return Err(LinalgError::NonFinite);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 0).ok_or(LinalgError::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Full eigendecomposition; fails when the eigenbasis is numerically singular.
pub fn eigen_decompose(a: &DMatrix<C64>) -> Result<EigenDecomposition, LinalgError> {
    if !is_finite(a) {
        return Err(LinalgError::NonFinite);
    }
    let n = a.nrows();
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 0).ok_or(LinalgError::NoConvergence)?;
    let (q, t) = schur.unpack();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * tnorm;

    // eigenvectors of the triangular factor by back substitution
    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut num = C64::new(0.0, 0.0);
            for l in j + 1..=k {
                num += t[(j, l)] * y[(l, k)];
            }
            let mut den = t[(j, j)] - lam;
            if den.norm() < smin {
                den = C64::new(smin, 0.0);
            }
            y[(j, k)] = -num / den;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
    }
    let inverse = v.clone().lu().try_inverse().ok_or(LinalgError::IllConditioned { condition: f64::INFINITY })?;
    let condition = norm_one(&v) * norm_one(&inverse);
    if !(condition.is_finite() && condition <= MAX_CONDITION) {
        return Err(LinalgError::IllConditioned { condition });
    }
    Ok(EigenDecomposition { values: t.diagonal().iter().copied().collect(), vectors: v, inverse, condition })
}

pub fn norm_one(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}
