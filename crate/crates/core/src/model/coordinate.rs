use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ArrowSystem, CoordinateState, ModelError, PairParams, ReservoirParams, StateLayout};

/// Second-order form `ẍ = −K x` of the full system.
///
/// `K = W^{1/2} S W^{1/2}` in oscillator order, which gives
/// `K_11 = ω0² + 4D1ω0`, `K_12 = 2Ωω0`, `K_{1,k} = g̃_k = 2√(ω0ω_k) g_k`
/// and `K_kk = ω_k² + 4D_bω_k`. Propagation is exact through the symmetric
/// eigendecomposition of `K`.
#[derive(Debug, Clone)]
pub struct CoordinateSystem {
    layout: StateLayout,
    omegas: Vec<f64>,
    k: DMatrix<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

/// Builds the coordinate form. Fails when any oscillator frequency is not
/// positive, because the amplitude ↔ coordinate map is then undefined.
pub fn build_coordinate_generator(
    p: &PairParams,
    r1: &ReservoirParams,
    r2: &ReservoirParams,
) -> Result<CoordinateSystem, ModelError> {
    CoordinateSystem::new(&ArrowSystem::new(p, r1, r2))
}

impl CoordinateSystem {
    pub fn new(sys: &ArrowSystem) -> Result<Self, ModelError> {
        let omegas = sys.frequencies().to_vec();
        if let Some((index, &omega)) = omegas.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(ModelError::NonpositiveFrequency { index, omega });
        }
        let root: Vec<f64> = omegas.iter().map(|w| w.sqrt()).collect();
        let s = sys.s_matrix();
        let k = DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| root[i] * s[(i, j)] * root[j]);
        let eigen = SymmetricEigen::new(k.clone());
        Ok(Self { layout: sys.layout(), omegas, k, eigen })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    /// Oscillator frequencies used by the variable map.
    pub fn frequencies(&self) -> &[f64] {
        &self.omegas
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Eigenvalues of `K`, i.e. squared normal-mode frequencies (ascending).
    pub fn squared_mode_frequencies(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigen.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Exact solution at time `t` from `state` at time 0.
    pub fn propagate(&self, state: &CoordinateState, t: f64) -> CoordinateState {
        let v = &self.eigen.eigenvectors;
        let xi0 = v.tr_mul(&DVector::from_column_slice(&state.x));
        let pi0 = v.tr_mul(&DVector::from_column_slice(&state.p));
        let mut xi = DVector::zeros(xi0.len());
        let mut pi = DVector::zeros(xi0.len());
        for (m, &mu) in self.eigen.eigenvalues.iter().enumerate() {
            let (c, s_over, s_times) = flow(mu, t);
            xi[m] = c * xi0[m] + s_over * pi0[m];
            pi[m] = s_times * xi0[m] + c * pi0[m];
        }
        CoordinateState { x: (v * xi).as_slice().to_vec(), p: (v * pi).as_slice().to_vec() }
    }

    pub fn trajectory(&self, state: &CoordinateState, times: &[f64]) -> Vec<CoordinateState> {
        times.iter().map(|&t| self.propagate(state, t)).collect()
    }
}

/// Flow coefficients of `ξ̈ = −μ ξ`: `(c, s/ω, −ω s)` so that
/// `ξ(t) = c ξ0 + (s/ω) π0` and `π(t) = (−ω s) ξ0 + c π0`.
fn flow(mu: f64, t: f64) -> (f64, f64, f64) {
    if mu > 0.0 {
        let w = mu.sqrt();
        let (s, c) = (w * t).sin_cos();
        (c, s / w, -w * s)
    } else if mu < 0.0 {
        let k = (-mu).sqrt();
        let (s, c) = ((k * t).sinh(), (k * t).cosh());
        (c, s / k, k * s)
    } else {
        (1.0, t, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DispersionLaw;

    #[test]
    fn single_oscillator_frequency() {
        let p = PairParams::new(1.0, 0.0, 0.3, 0.0).unwrap();
        let r = ReservoirParams::new(1, 0.1, DispersionLaw::flat(0.0)).unwrap();
        let cs = build_coordinate_generator(&p, &r, &r).unwrap();
        let w = (1.0f64 + 4.0 * 0.3).sqrt();
        let x0 = CoordinateState { x: vec![1.0, 0.0, 0.0, 0.0], p: vec![0.0; 4] };
        for t in [0.3, 1.7, 12.0] {
            let s = cs.propagate(&x0, t);
            assert!((s.x[0] - (w * t).cos()).abs() < 1e-12);
            assert!(s.x[1].abs() < 1e-14);
        }
    }

    #[test]
    fn effective_coupling_at_resonance() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.2).unwrap();
        // N = 2, δω = 0.01 puts ω_1 exactly at ω0
        let r = ReservoirParams::new(2, 0.01, DispersionLaw::flat(0.05)).unwrap();
        let cs = build_coordinate_generator(&p, &r, &r).unwrap();
        assert!((cs.stiffness()[(0, 2)] - 2.0 * 0.05).abs() < 1e-15);
        assert!((cs.stiffness()[(0, 1)] - 0.4).abs() < 1e-15);
        assert!((cs.stiffness()[(0, 0)] - (1.0 + 4.0 * 0.04)).abs() < 1e-15);
    }

    #[test]
    fn pair_mode_frequencies() {
        let om: f64 = 0.5;
        let p = PairParams::with_default_diamagnetic(1.0, om).unwrap();
        let cs = CoordinateSystem::new(&ArrowSystem::isolated(&p)).unwrap();
        let m = cs.squared_mode_frequencies();
        assert!((m[0] - (1.0 - 2.0 * om + 4.0 * om * om)).abs() < 1e-13);
        assert!((m[1] - (1.0 + 2.0 * om + 4.0 * om * om)).abs() < 1e-13);
    }

    #[test]
    fn rejects_negative_reservoir_modes() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.1).unwrap();
        let r = ReservoirParams::new(300, 0.01, DispersionLaw::flat(0.01)).unwrap();
        assert!(matches!(
            build_coordinate_generator(&p, &r, &r),
            Err(ModelError::NonpositiveFrequency { .. })
        ));
    }
}
