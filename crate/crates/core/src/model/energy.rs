use super::{ArrowSystem, ModelError, PairParams, ReservoirParams, TotalState};
use crate::C64;

/// Precomputed quadratic form `H = (uᴴ S u + wᴴ W w)/4` of a system.
///
/// For conjugate-symmetric states `u = 2 Re a` and `w = 2 Im a` are real and
/// this equals the coordinate-form Hamiltonian
/// `Σ p²/2 + Σ K_jl x_j x_l / 2`. The quadrature form stays well defined
/// for reservoir modes with `ω_k <= 0`, where the coordinate map is not.
#[derive(Debug, Clone)]
pub struct EnergyForm {
    system: ArrowSystem,
}

impl EnergyForm {
    pub fn new(system: ArrowSystem) -> Self {
        Self { system }
    }

    pub fn from_params(p: &PairParams, r1: &ReservoirParams, r2: &ReservoirParams) -> Self {
        Self::new(ArrowSystem::new(p, r1, r2))
    }

    pub fn system(&self) -> &ArrowSystem {
        &self.system
    }

    pub fn eval(&self, state: &TotalState) -> Result<f64, ModelError> {
        let layout = self.system.layout();
        if state.layout() != layout {
            return Err(ModelError::DimensionMismatch { expected: layout.dim(), found: state.amplitudes().len() });
        }
        Ok(self.eval_amplitudes(state.amplitudes()))
    }

    /// Energy of a raw amplitude vector in the system's layout.
    pub fn eval_amplitudes(&self, amps: &[C64]) -> f64 {
        let sys = &self.system;
        let layout = sys.layout();
        let n = layout.oscillators();
        let mut u = Vec::with_capacity(n);
        let mut acc = 0.0;
        for j in 0..n {
            let (i, ic) = layout.slots(j);
            let uj = amps[i] + amps[ic];
            let wj = (amps[i] - amps[ic]) * C64::new(0.0, -1.0);
            acc += sys.s_diag(j) * uj.norm_sqr() + sys.frequencies()[j] * wj.norm_sqr();
            u.push(uj);
        }
        for (i, j, s) in sys.s_offdiag() {
            acc += 2.0 * s * (u[i].conj() * u[j]).re;
        }
        0.25 * acc
    }
}

/// Classical energy `H_S + H_R + H_SR` of a state.
pub fn classical_energy(
    state: &TotalState,
    p: &PairParams,
    r1: &ReservoirParams,
    r2: &ReservoirParams,
) -> Result<f64, ModelError> {
    EnergyForm::from_params(p, r1, r2).eval(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_coordinate_generator, CoordinateState, DispersionLaw, StateLayout};

    fn res(n: usize, g0: f64) -> ReservoirParams {
        ReservoirParams::new(n, 0.1, DispersionLaw::flat(g0)).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.3).unwrap();
        let r = res(2, 0.1);
        let s = TotalState::zeros(StateLayout::new(2, 2));
        assert_eq!(classical_energy(&s, &p, &r, &r).unwrap(), 0.0);
    }

    #[test]
    fn single_quantum_energy() {
        let p = PairParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let r = res(2, 0.0);
        let s = TotalState::default_initial(StateLayout::new(2, 2));
        assert!((classical_energy(&s, &p, &r, &r).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = PairParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let r = res(2, 0.0);
        let s = TotalState::zeros(StateLayout::new(1, 2));
        assert!(matches!(classical_energy(&s, &p, &r, &r), Err(ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn matches_coordinate_hamiltonian() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.6).unwrap();
        let r1 = ReservoirParams::new(3, 0.1, DispersionLaw::power_law(0.05, 1.0)).unwrap();
        let r2 = res(2, 0.03);
        let layout = StateLayout::new(3, 2);
        let mut s = TotalState::zeros(layout);
        for j in 0..layout.oscillators() {
            s.set_oscillator(j, C64::new(0.3 * j as f64 - 0.5, 0.2 + 0.1 * j as f64));
        }
        let cs = build_coordinate_generator(&p, &r1, &r2).unwrap();
        let c = CoordinateState::from_total(&s, cs.frequencies()).unwrap();
        let k = cs.stiffness();
        let mut h = 0.5 * c.p.iter().map(|v| v * v).sum::<f64>();
        for i in 0..c.x.len() {
            for j in 0..c.x.len() {
                h += 0.5 * k[(i, j)] * c.x[i] * c.x[j];
            }
        }
        let e = classical_energy(&s, &p, &r1, &r2).unwrap();
        assert!((e - h).abs() < 1e-13 * h.abs().max(1.0), "{e} vs {h}");
    }
}
