use serde::Serialize;

use super::ModelError;
use crate::C64;

/// Index map of the total amplitude vector
/// `(a1, a1*, a2, a2*, b_1..b_N1, b*_1..b*_N1, c_1..c_N2, c*_1..c*_N2)`.
///
/// Oscillators are numbered `0 = a1`, `1 = a2`, `2..2+N1` for the first
/// reservoir and `2+N1..2+N1+N2` for the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateLayout {
    n1: usize,
    n2: usize,
}

impl StateLayout {
    pub const A1: usize = 0;
    pub const A1_CONJ: usize = 1;
    pub const A2: usize = 2;
    pub const A2_CONJ: usize = 3;

    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn dim(&self) -> usize {
        4 + 2 * self.n1 + 2 * self.n2
    }

    pub fn oscillators(&self) -> usize {
        2 + self.n1 + self.n2
    }

    pub fn b(&self, k: usize) -> usize {
        4 + k
    }

    pub fn b_conj(&self, k: usize) -> usize {
        4 + self.n1 + k
    }

    pub fn c(&self, k: usize) -> usize {
        4 + 2 * self.n1 + k
    }

    pub fn c_conj(&self, k: usize) -> usize {
        4 + 2 * self.n1 + self.n2 + k
    }

    /// `(amplitude, conjugate)` slots of oscillator `j`.
    pub fn slots(&self, j: usize) -> (usize, usize) {
        match j {
            0 => (Self::A1, Self::A1_CONJ),
            1 => (Self::A2, Self::A2_CONJ),
            j if j < 2 + self.n1 => (self.b(j - 2), self.b_conj(j - 2)),
            j => (self.c(j - 2 - self.n1), self.c_conj(j - 2 - self.n1)),
        }
    }
}

/// Amplitudes of all oscillators and of their formal conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalState {
    layout: StateLayout,
    amplitudes: Vec<C64>,
}

impl TotalState {
    pub fn zeros(layout: StateLayout) -> Self {
        Self { layout, amplitudes: vec![C64::new(0.0, 0.0); layout.dim()] }
    }

    pub fn from_amplitudes(layout: StateLayout, amplitudes: Vec<C64>) -> Result<Self, ModelError> {
        if amplitudes.len() != layout.dim() {
            return Err(ModelError::DimensionMismatch { expected: layout.dim(), found: amplitudes.len() });
        }
        Ok(Self { layout, amplitudes })
    }

    /// Reservoirs empty, system amplitudes set together with their conjugates.
    pub fn with_system(layout: StateLayout, a1: C64, a2: C64) -> Self {
        let mut s = Self::zeros(layout);
        s.set_oscillator(0, a1);
        s.set_oscillator(1, a2);
        s
    }

    /// The default initial condition: `a1 = 1`, everything else empty.
    pub fn default_initial(layout: StateLayout) -> Self {
        Self::with_system(layout, C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    /// Sets oscillator `j` to `z` and its conjugate slot to `conj(z)`.
    pub fn set_oscillator(&mut self, j: usize, z: C64) {
        let (i, ic) = self.layout.slots(j);
        self.amplitudes[i] = z;
        self.amplitudes[ic] = z.conj();
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn a1(&self) -> C64 {
        self.amplitudes[StateLayout::A1]
    }

    pub fn a2(&self) -> C64 {
        self.amplitudes[StateLayout::A2]
    }

    /// Largest `|z* − conj(z)|` over all oscillators.
    pub fn conjugacy_deviation(&self) -> f64 {
        conjugacy_deviation(&self.layout, &self.amplitudes)
    }
}

pub(crate) fn conjugacy_deviation(layout: &StateLayout, amps: &[C64]) -> f64 {
    (0..layout.oscillators())
        .map(|j| {
            let (i, ic) = layout.slots(j);
            (amps[ic] - amps[i].conj()).norm()
        })
        .fold(0.0, f64::max)
}

/// Real positions and momenta `(x1, x2, y^(1)_k.., y^(2)_k..)`,
/// `(p1, p2, q^(1)_k.., q^(2)_k..)` in oscillator order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// Tolerance on the conjugate pairing accepted by the amplitude → coordinate map.
const CONJ_TOL: f64 = 1e-9;

impl CoordinateState {
    /// `x = (a + a*)/√(2ω)`, `p = −i√(ω/2)(a − a*)`.
    ///
    /// `omegas` holds the frequency of each oscillator; all must be positive.
    pub fn from_total(state: &TotalState, omegas: &[f64]) -> Result<Self, ModelError> {
        let layout = state.layout();
        check_frequencies(layout, omegas)?;
        let dev = state.conjugacy_deviation();
        let scale = state.amplitudes().iter().map(|z| z.norm()).fold(1.0, f64::max);
        if dev > CONJ_TOL * scale {
            return Err(ModelError::NotConjugate(dev));
        }
        let amps = state.amplitudes();
        let n = layout.oscillators();
        let mut x = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for (j, &w) in omegas.iter().enumerate() {
            let (i, ic) = layout.slots(j);
            // average the pair so that a tiny conjugacy defect is symmetrised away
            let a = 0.5 * (amps[i] + amps[ic].conj());
            x.push(2.0 * a.re / (2.0 * w).sqrt());
            p.push(2.0 * a.im * (w / 2.0).sqrt());
        }
        Ok(Self { x, p })
    }

    /// Inverse map, `a = (ω x + i p)/√(2ω)`.
    pub fn to_total(&self, layout: StateLayout, omegas: &[f64]) -> Result<TotalState, ModelError> {
        check_frequencies(layout, omegas)?;
        if self.x.len() != omegas.len() || self.p.len() != omegas.len() {
            return Err(ModelError::DimensionMismatch { expected: omegas.len(), found: self.x.len().min(self.p.len()) });
        }
        let mut s = TotalState::zeros(layout);
        for (j, &w) in omegas.iter().enumerate() {
            let a = C64::new(w * self.x[j], self.p[j]) / (2.0 * w).sqrt();
            s.set_oscillator(j, a);
        }
        Ok(s)
    }
}

fn check_frequencies(layout: StateLayout, omegas: &[f64]) -> Result<(), ModelError> {
    if omegas.len() != layout.oscillators() {
        return Err(ModelError::DimensionMismatch { expected: layout.oscillators(), found: omegas.len() });
    }
    if let Some((index, &omega)) = omegas.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(ModelError::NonpositiveFrequency { index, omega });
    }
    Ok(())
}
