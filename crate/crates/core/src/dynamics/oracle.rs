//! Spectral-decomposition propagator, `x(t) = V e^{Λt} V⁻¹ x0`.

use nalgebra::{DMatrix, DVector};

use super::DynamicsError;
use crate::linalg::{eigen_decompose, EigenDecomposition};
use crate::C64;

/// Largest dimension accepted by the dense oracle.
pub const ORACLE_MAX_DIM: usize = 1400;

/// Precomputed eigendecomposition of a generator.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    eig: EigenDecomposition,
}

impl SpectralPropagator {
    pub fn new(g: &DMatrix<C64>) -> Result<Self, DynamicsError> {
        if g.nrows() > ORACLE_MAX_DIM {
            return Err(DynamicsError::OracleTooLarge(g.nrows()));
        }
        Ok(Self { eig: eigen_decompose(g)? })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eig.values
    }

    pub fn condition(&self) -> f64 {
        self.eig.condition
    }

    /// Modal coefficients `V⁻¹ x0`.
    pub fn coefficients(&self, x0: &[C64]) -> DVector<C64> {
        &self.eig.inverse * DVector::from_column_slice(x0)
    }

    /// State at time `t` from modal coefficients.
    pub fn evaluate(&self, coeffs: &DVector<C64>, t: f64) -> Vec<C64> {
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(&self.eig.values).map(|(c, l)| c * (l * t).exp()),
        );
        (&self.eig.vectors * scaled).as_slice().to_vec()
    }

    /// Only rows `rows` of the state at time `t`.
    pub fn evaluate_rows(&self, coeffs: &DVector<C64>, t: f64, rows: &[usize]) -> Vec<C64> {
        let phases: Vec<C64> = coeffs.iter().zip(&self.eig.values).map(|(c, l)| c * (l * t).exp()).collect();
        rows.iter()
            .map(|&r| self.eig.vectors.row(r).iter().zip(&phases).map(|(v, p)| v * p).sum())
            .collect()
    }
}
