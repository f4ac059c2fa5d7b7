use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix4};

use super::{ArrowSystem, DissipativeParams, PairParams, ReservoirParams};
use crate::{C64, I};

/// Variable order used when the 4×4 generators are printed: `(a1, a2, a1*, a2*)`.
///
/// `PRINTED_ORDER[i]` is the [`TotalState`](super::TotalState) slot of the
/// `i`-th printed variable, so the printed matrix `M` relates to the state
/// order matrix `M'` by `M'[P[i], P[j]] = M[i, j]`.
pub const PRINTED_ORDER: [usize; 4] = [0, 2, 1, 3];

/// Closed-system generator in printed order `(a1, a2, a1*, a2*)`.
///
/// ```text
/// [ −iω0−2iD1   −iΩ        −2iD1      −iΩ      ]
/// [ −iΩ         −iω0−2iD2  −iΩ        −2iD2    ]
/// [  2iD1        iΩ         iω0+2iD1   iΩ      ]
/// [  iΩ          2iD2       iΩ         iω0+2iD2]
/// ```
pub fn build_closed_generator(p: &PairParams) -> Matrix4<C64> {
    let w0 = p.omega0();
    let om = p.coupling();
    let (d1, d2) = (p.d1(), p.d2());
    let z = |x: f64| I * x;
    Matrix4::new(
        z(-w0 - 2.0 * d1), z(-om), z(-2.0 * d1), z(-om),
        z(-om), z(-w0 - 2.0 * d2), z(-om), z(-2.0 * d2),
        z(2.0 * d1), z(om), z(w0 + 2.0 * d1), z(om),
        z(om), z(2.0 * d2), z(om), z(w0 + 2.0 * d2),
    )
}

/// Closed generator with `−γ1` on the `a1`, `a1*` diagonal entries and `−γ2`
/// on the `a2`, `a2*` ones (printed order).
pub fn build_dissipative_generator(p: &PairParams, d: &DissipativeParams) -> Matrix4<C64> {
    let mut m = build_closed_generator(p);
    let g = [d.gamma1(), d.gamma2(), d.gamma1(), d.gamma2()];
    for (i, gi) in g.into_iter().enumerate() {
        m[(i, i)] -= gi;
    }
    m
}

/// Permutes a printed-order 4×4 generator into state order `(a1, a1*, a2, a2*)`.
pub fn printed_to_state_order(m: &Matrix4<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[(PRINTED_ORDER[i], PRINTED_ORDER[j])] = m[(i, j)];
        }
    }
    out
}

/// Anything that can act linearly on a complex state vector.
pub trait LinearGenerator: Sync {
    fn dim(&self) -> usize;

    /// `y = G x`
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// An upper bound on an induced norm of `G`, used for step control.
    fn norm_bound(&self) -> f64;
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (r, c) => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != C64::new(0.0, 0.0));
        let mut row_ptr = vec![0usize; n + 1];
        for t in &merged {
            row_ptr[t.0 + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = merged.iter().map(|t| t.1).collect();
        let vals = merged.iter().map(|t| t.2).collect();
        Self { n, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                t.push((i, j, m[(i, j)]));
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `(row, col, value)` of every stored entry in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Max absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            col[*c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

impl LinearGenerator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm_inf().min(self.norm_one())
    }
}

impl LinearGenerator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn norm_bound(&self) -> f64 {
        let inf = self.row_iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        let one = self.column_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        inf.min(one)
    }
}

/// Generator of the full mean-field system in [`TotalState`](super::TotalState)
/// layout.
///
/// Row `a_j` reads `ȧ_j = −i(ω_j + 2D_j) a_j − 2iD_j a_j* − i Σ_l (S_jl/2)(a_l + a_l*)`,
/// i.e. `ȧ1 = −i(ω0+2D1)a1 − 2iD1 a1* − iΩ(a2+a2*) − i Σ_k g1_k (b_k + b_k*)` and
/// `ḃ_k = −i(ω_k+2D_b)b_k − 2iD_b b_k* − i g1_k (a1 + a1*)`. Conjugate rows are
/// the complex conjugates with the roles of `z` and `z*` swapped.
pub fn build_total_generator(p: &PairParams, r1: &ReservoirParams, r2: &ReservoirParams) -> SparseMatrix {
    arrow_generator(&ArrowSystem::new(p, r1, r2))
}

pub(crate) fn arrow_generator(sys: &ArrowSystem) -> SparseMatrix {
    let layout = sys.layout();
    let mut t = Vec::new();
    let push_pair = |t: &mut Vec<(usize, usize, C64)>, j: usize, l: usize, half_s: f64| {
        // a_j row gains −i·half_s on a_l and a_l*; a_j* row gains +i·half_s
        let (aj, ajc) = layout.slots(j);
        let (al, alc) = layout.slots(l);
        let v = -I * half_s;
        t.push((aj, al, v));
        t.push((aj, alc, v));
        t.push((ajc, al, -v));
        t.push((ajc, alc, -v));
    };
    for j in 0..layout.oscillators() {
        let d = sys.diamagnetic()[j];
        push_pair(&mut t, j, j, 2.0 * d);
        let (aj, ajc) = layout.slots(j);
        let w = sys.frequencies()[j];
        t.push((aj, aj, -I * w));
        t.push((ajc, ajc, I * w));
    }
    for (i, j, s) in sys.s_offdiag() {
        push_pair(&mut t, i, j, 0.5 * s);
        push_pair(&mut t, j, i, 0.5 * s);
    }
    SparseMatrix::from_triplets(layout.dim(), t)
}

/// Writes `row,col,re,im` lines (header included) for every stored entry.
pub fn write_matrix_csv(m: &SparseMatrix) -> String {
    let mut out = String::from("row,col,re,im\n");
    for (r, c, v) in m.triplets() {
        let _ = writeln!(out, "{r},{c},{:.16e},{:.16e}", v.re, v.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DispersionLaw, StateLayout};

    fn approx(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn uncoupled_closed_generator_is_diagonal() {
        let p = PairParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let m = build_closed_generator(&p);
        let expect = [-I, -I, I, I];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { C64::new(0.0, 0.0) };
                assert!(approx(m[(i, j)], e));
            }
        }
    }

    #[test]
    fn printed_layout_entries() {
        let p = PairParams::new(1.0, 0.3, 0.2, 0.1).unwrap();
        let m = build_closed_generator(&p);
        assert!(approx(m[(0, 1)], -I * 0.3));
        assert!(approx(m[(0, 2)], -I * 0.4));
        assert!(approx(m[(3, 1)], I * 0.2));
    }

    #[test]
    fn lossless_dissipative_equals_closed() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.4).unwrap();
        let a = build_closed_generator(&p);
        let b = build_dissipative_generator(&p, &DissipativeParams::lossless());
        assert_eq!(a, b);
    }

    fn reservoir(n: usize, g0: f64) -> ReservoirParams {
        ReservoirParams::new(n, 0.05, DispersionLaw::flat(g0)).unwrap()
    }

    #[test]
    fn decoupled_total_generator_contains_closed_block() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.35).unwrap();
        let r = reservoir(3, 0.0);
        let g = build_total_generator(&p, &r, &r);
        let closed = printed_to_state_order(&build_closed_generator(&p));
        for i in 0..4 {
            for j in 0..4 {
                assert!(approx(g.get(i, j), closed[(i, j)]));
            }
            for j in 4..g.dim() {
                assert_eq!(g.get(i, j), C64::new(0.0, 0.0));
                assert_eq!(g.get(j, i), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn system_row_couples_to_every_reservoir_mode() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.2).unwrap();
        let disp = DispersionLaw::power_law(0.01, 1.0);
        let r1 = ReservoirParams::new(4, 0.1, disp).unwrap();
        let r2 = reservoir(2, 0.02);
        let g = build_total_generator(&p, &r1, &r2);
        let l = StateLayout::new(4, 2);
        let w = r1.frequencies(1.0);
        for k in 0..4 {
            let gk = -I * 0.01 * w[k];
            assert!(approx(g.get(StateLayout::A1, l.b(k)), gk));
            assert!(approx(g.get(StateLayout::A1, l.b_conj(k)), gk));
            assert!(approx(g.get(l.b(k), StateLayout::A1_CONJ), gk));
            assert_eq!(g.get(StateLayout::A2, l.b(k)), C64::new(0.0, 0.0));
        }
        for k in 0..2 {
            assert!(approx(g.get(StateLayout::A2, l.c(k)), -I * 0.02));
            // diamagnetic reservoir term D_c = g²/2ω0
            assert!(approx(g.get(l.c(k), l.c_conj(k)), -I * 2.0 * 0.0002));
        }
    }

    #[test]
    fn sparse_matches_dense_product() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.5).unwrap();
        let r = reservoir(3, 0.05);
        let g = build_total_generator(&p, &r, &r);
        let dense = g.to_dense();
        let x: Vec<C64> = (0..g.dim()).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.03)).collect();
        let mut y1 = vec![C64::new(0.0, 0.0); g.dim()];
        let mut y2 = y1.clone();
        g.apply(&x, &mut y1);
        dense.apply(&x, &mut y2);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!((g.norm_bound() - dense.norm_bound()).abs() < 1e-13);
    }

    #[test]
    fn matrix_dump_lists_entries() {
        let p = PairParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let r = reservoir(1, 0.0).with_diamagnetic(crate::model::DiamagneticPolicy::Zero);
        let csv = write_matrix_csv(&build_total_generator(&p, &r, &r));
        assert!(csv.starts_with("row,col,re,im\n0,0,"));
        assert_eq!(csv.lines().count(), 1 + 8);
    }
}
