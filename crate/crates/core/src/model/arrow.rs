use nalgebra::DMatrix;

use super::{PairParams, ReservoirParams, StateLayout};

/// Real quadratic form behind every generator.
///
/// With `u = a + a*` and `w = −i(a − a*)` per oscillator the mean-field
/// equations read `u̇ = W w`, `ẇ = −S u`, where `W = diag(ω_j)` and `S` is a
/// symmetric arrow matrix:
///
/// * `S_jj = ω_j + 4 D_j`
/// * `S_12 = 2Ω`
/// * `S_{1,b_k} = 2 g1_k`, `S_{2,c_k} = 2 g2_k`
///
/// The conserved energy is `H = (uᵀ S u + wᵀ W w)/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowSystem {
    layout: StateLayout,
    omega: Vec<f64>,
    diamagnetic: Vec<f64>,
    coupling: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl ArrowSystem {
    pub fn new(p: &PairParams, r1: &ReservoirParams, r2: &ReservoirParams) -> Self {
        let w0 = p.omega0();
        let mut omega = vec![w0, w0];
        omega.extend(r1.frequencies(w0));
        omega.extend(r2.frequencies(w0));
        let mut diamagnetic = vec![p.d1(), p.d2()];
        diamagnetic.extend(r1.diamagnetic_coefficients(w0));
        diamagnetic.extend(r2.diamagnetic_coefficients(w0));
        Self {
            layout: StateLayout::new(r1.n(), r2.n()),
            omega,
            diamagnetic,
            coupling: p.coupling(),
            g1: r1.couplings(w0),
            g2: r2.couplings(w0),
        }
    }

    /// The two oscillators alone.
    pub fn isolated(p: &PairParams) -> Self {
        Self {
            layout: StateLayout::new(0, 0),
            omega: vec![p.omega0(), p.omega0()],
            diamagnetic: vec![p.d1(), p.d2()],
            coupling: p.coupling(),
            g1: Vec::new(),
            g2: Vec::new(),
        }
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    /// Frequency of each oscillator in layout order.
    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn diamagnetic(&self) -> &[f64] {
        &self.diamagnetic
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn g1(&self) -> &[f64] {
        &self.g1
    }

    pub fn g2(&self) -> &[f64] {
        &self.g2
    }

    pub fn s_diag(&self, j: usize) -> f64 {
        self.omega[j] + 4.0 * self.diamagnetic[j]
    }

    /// Off-diagonal couplings of `S` as `(row, col, value)` with `row < col`.
    pub fn s_offdiag(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n1 = self.layout.n1();
        std::iter::once((0, 1, 2.0 * self.coupling))
            .chain(self.g1.iter().enumerate().map(|(k, &g)| (0, 2 + k, 2.0 * g)))
            .chain(self.g2.iter().enumerate().map(move |(k, &g)| (1, 2 + n1 + k, 2.0 * g)))
    }

    /// Dense `S`.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        let n = self.layout.oscillators();
        let mut s = DMatrix::zeros(n, n);
        for j in 0..n {
            s[(j, j)] = self.s_diag(j);
        }
        for (i, j, v) in self.s_offdiag() {
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
        s
    }

    /// Number of oscillators with `ω_j <= 0`.
    pub fn nonpositive_modes(&self) -> usize {
        self.omega.iter().filter(|&&w| w <= 0.0).count()
    }
}
