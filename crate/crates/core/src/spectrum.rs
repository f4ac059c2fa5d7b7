//! Eigenvalue analysis of the damped 4×4 model: sorted spectra, branch
//! tracking over the coupling strength and exceptional-point search.

use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::model::{build_dissipative_generator, DissipativeParams, ModelError, PairParams};
use crate::C64;

/// Gap below which eigenvalues count as coalesced.
pub const COALESCENCE_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("empty coupling bracket [{0}, {1}]")]
    EmptyBracket(f64, f64),
    #[error("coupling grid must be ascending")]
    UnsortedGrid,
}

/// Relative tolerance for treating imaginary parts as equal when sorting.
const TIE: f64 = 1e-12;

/// Eigenvalues sorted by descending imaginary part; near-ties (relative
/// `1e-12`) are broken by descending real part.
pub fn eigenvalues4(m: &Matrix4<C64>) -> Result<[C64; 4], SpectrumError> {
    let dense = DMatrix::from_iterator(4, 4, m.iter().copied());
    let mut v = linalg::eigenvalues(&dense)?;
    let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    v.sort_by(|a, b| {
        if (a.im - b.im).abs() <= TIE * scale {
            b.re.total_cmp(&a.re)
        } else {
            b.im.total_cmp(&a.im)
        }
    });
    Ok([v[0], v[1], v[2], v[3]])
}

/// One coupling value with four branch-labelled eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPoint {
    pub coupling: f64,
    /// `eigenvalues[b]` belongs to branch `b` for every point of a sweep.
    pub eigenvalues: [C64; 4],
}

impl SpectrumPoint {
    /// Largest distance from any eigenvalue to the nearest conjugate of
    /// another member of the set.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| self.eigenvalues.iter().map(|w| (z.conj() - w).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    pub fn real_spread(&self) -> f64 {
        let re = self.eigenvalues.iter().map(|z| z.re);
        re.clone().fold(f64::NEG_INFINITY, f64::max) - re.fold(f64::INFINITY, f64::min)
    }

    /// Smallest pairwise eigenvalue distance.
    pub fn min_gap(&self) -> f64 {
        min_gap(&self.eigenvalues)
    }
}

fn min_gap(ev: &[C64; 4]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            g = g.min((ev[i] - ev[j]).norm());
        }
    }
    g
}

fn spectrum_at(template: &PairParams, d: &DissipativeParams, coupling: f64) -> Result<[C64; 4], SpectrumError> {
    let p = template.at_coupling(coupling)?;
    eigenvalues4(&build_dissipative_generator(&p, d))
}

/// Permutations of four labels, used for nearest-neighbour branch matching.
fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| (0..4).filter(|&j| p[j] == i).count() == 1) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Spectra along an ascending grid with `D1 = D2 = Ω²/ω0` at each point.
///
/// Branches are continued by choosing, at each step, the assignment that
/// minimises the summed squared distance to a linear extrapolation of the
/// previous two points.
pub fn sweep_spectrum(
    template: &PairParams,
    d: &DissipativeParams,
    grid: &[f64],
) -> Result<Vec<SpectrumPoint>, SpectrumError> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectrumError::UnsortedGrid);
    }
    let perms = permutations4();
    let mut out: Vec<SpectrumPoint> = Vec::with_capacity(grid.len());
    for &om in grid {
        let raw = spectrum_at(template, d, om)?;
        let labelled = match out.len() {
            0 => raw,
            n => {
                let prev = &out[n - 1].eigenvalues;
                let predicted: [C64; 4] = if n >= 2 {
                    let pp = &out[n - 2].eigenvalues;
                    let (h0, h1) = (out[n - 1].coupling - out[n - 2].coupling, om - out[n - 1].coupling);
                    std::array::from_fn(|b| prev[b] + (prev[b] - pp[b]) * (h1 / h0))
                } else {
                    *prev
                };
                let cost = |p: &[usize; 4]| (0..4).map(|b| (raw[p[b]] - predicted[b]).norm_sqr()).sum::<f64>();
                let best = perms.iter().min_by(|x, y| cost(x).total_cmp(&cost(y))).unwrap();
                std::array::from_fn(|b| raw[best[b]])
            }
        };
        out.push(SpectrumPoint { coupling: om, eigenvalues: labelled });
    }
    Ok(out)
}

/// Result of an exceptional-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    pub coupling: f64,
    pub gap: f64,
    pub found: bool,
}

const SCAN_POINTS: usize = 2001;
const REFINE_TOL: f64 = 1e-12;

/// Minimises the smallest pairwise eigenvalue gap over `[lo, hi]`.
///
/// A coarse scan brackets the minimum, golden-section search refines it.
/// The point counts as exceptional when the gap is below
/// [`COALESCENCE_THRESHOLD`] and the minimum lies strictly inside the
/// bracket; a minimum pinned to an end point (e.g. the degenerate spectrum of
/// identical uncoupled oscillators at `Ω = 0`) is not a coalescence.
pub fn find_exceptional_point(
    template: &PairParams,
    d: &DissipativeParams,
    bracket: (f64, f64),
) -> Result<ExceptionalPoint, SpectrumError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && hi > lo && lo >= 0.0) {
        return Err(SpectrumError::EmptyBracket(lo, hi));
    }
    let gap = |om: f64| spectrum_at(template, d, om).map(|e| min_gap(&e));
    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..SCAN_POINTS {
        let g = gap(lo + h * i as f64)?;
        if g < best.1 {
            best = (i, g);
        }
    }
    let interior = best.0 > 0 && best.0 < SCAN_POINTS - 1;
    if !interior {
        let om = lo + h * best.0 as f64;
        return Ok(ExceptionalPoint { coupling: om, gap: best.1, found: false });
    }
    let (mut a, mut b) = (lo + h * (best.0 - 1) as f64, lo + h * (best.0 + 1) as f64);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut gc, mut ge) = (gap(c)?, gap(e)?);
    while b - a > REFINE_TOL {
        if gc < ge {
            b = e;
            e = c;
            ge = gc;
            c = b - inv_phi * (b - a);
            gc = gap(c)?;
        } else {
            a = c;
            c = e;
            gc = ge;
            e = a + inv_phi * (b - a);
            ge = gap(e)?;
        }
    }
    let (om, g) = if gc < ge { (c, gc) } else { (e, ge) };
    let (om, g) = if g < best.1 { (om, g) } else { (lo + h * best.0 as f64, best.1) };
    Ok(ExceptionalPoint { coupling: om, gap: g, found: g < COALESCENCE_THRESHOLD })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::I;
    use proptest::prelude::*;

    fn template() -> PairParams {
        PairParams::with_default_diamagnetic(1.0, 0.0).unwrap()
    }

    #[test]
    fn diagonal_input() {
        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(-I, -I, I, I));
        let e = eigenvalues4(&m).unwrap();
        assert_eq!(e, [I, I, -I, -I]);
    }

    #[test]
    fn uncoupled_damped_pair() {
        let d = DissipativeParams::new(0.2, 0.01).unwrap();
        let e = spectrum_at(&template(), &d, 0.0).unwrap();
        let want = [C64::new(-0.01, 1.0), C64::new(-0.2, 1.0), C64::new(-0.01, -1.0), C64::new(-0.2, -1.0)];
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn characteristic_polynomial_residual() {
        let d = DissipativeParams::new(0.2, 0.01).unwrap();
        for om in [0.0, 0.05, 0.0967626, 0.3, 1.2] {
            let m = build_dissipative_generator(&template().at_coupling(om).unwrap(), &d);
            let scale = m.norm().powi(4);
            for z in eigenvalues4(&m).unwrap() {
                let r = (m - Matrix4::identity() * z).determinant().norm();
                assert!(r < 1e-10 * scale, "Ω={om}: {r:e}");
            }
        }
    }

    #[test]
    fn imaginary_parts_below_exceptional_point() {
        // the magnitudes drift by about 1.4% between Ω = 0 and the EP
        let d = DissipativeParams::new(0.2, 0.01).unwrap();
        let grid: Vec<f64> = (0..=19).map(|i| 0.005 * i as f64).collect();
        let pts = sweep_spectrum(&template(), &d, &grid).unwrap();
        let im: Vec<f64> = pts.iter().map(|p| p.eigenvalues[0].im).collect();
        let (lo, hi) = (im.iter().cloned().fold(f64::INFINITY, f64::min), im.iter().cloned().fold(0.0, f64::max));
        assert!((hi - lo) / lo < 0.015, "{lo} {hi}");
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = C64::new(f64::INFINITY, 0.0);
        assert!(eigenvalues4(&m).is_err());
    }

    #[test]
    fn lossless_sweep_has_zero_real_parts() {
        let grid: Vec<f64> = (0..40).map(|i| 0.05 * i as f64).collect();
        let pts = sweep_spectrum(&template(), &DissipativeParams::lossless(), &grid).unwrap();
        for p in &pts {
            assert!(p.eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
        }
    }

    #[test]
    fn exceptional_point_for_unequal_damping() {
        let d = DissipativeParams::new(0.2, 0.01).unwrap();
        let ep = find_exceptional_point(&template(), &d, (0.0, 0.5)).unwrap();
        assert!(ep.found, "{ep:?}");
        assert!(ep.coupling > 0.0 && ep.coupling < 0.2);
        assert!((ep.coupling - 0.0967626).abs() < 1e-5);

        let grid: Vec<f64> = (1..=60).map(|i| 0.005 * i as f64).collect();
        let pts = sweep_spectrum(&template(), &d, &grid).unwrap();
        let mid = -(0.2 + 0.01) / 2.0;
        for p in &pts {
            if p.coupling > ep.coupling + 0.01 {
                assert!(p.real_spread() < 1e-6, "{} {}", p.coupling, p.real_spread());
            } else if p.coupling < ep.coupling - 0.01 {
                let lo = p.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                let hi = p.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                assert!(lo < mid && hi > mid && hi - lo > 1e-3);
            }
        }
    }

    #[test]
    fn no_exceptional_point_for_equal_or_zero_damping() {
        for g in [0.05, 0.0] {
            let d = DissipativeParams::new(g, g).unwrap();
            let ep = find_exceptional_point(&template(), &d, (0.0, 2.0)).unwrap();
            assert!(!ep.found, "{ep:?}");
        }
    }

    #[test]
    fn empty_bracket() {
        let d = DissipativeParams::lossless();
        assert!(matches!(find_exceptional_point(&template(), &d, (0.3, 0.3)), Err(SpectrumError::EmptyBracket(..))));
    }

    #[test]
    fn branches_are_continuous() {
        let d = DissipativeParams::new(0.2, 0.01).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| 0.01 * i as f64).collect();
        let pts = sweep_spectrum(&template(), &d, &grid).unwrap();
        for w in pts.windows(2) {
            for b in 0..4 {
                // the eigenvalue slope never exceeds ~4 away from the EP
                assert!((w[1].eigenvalues[b] - w[0].eigenvalues[b]).norm() < 0.2);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn spectrum_closed_under_conjugation(
            om in 0.0f64..2.0, g1 in 0.0f64..0.5, g2 in 0.0f64..0.5, extra in 0.0f64..1.0
        ) {
            let d0 = om * om / 2.0 + extra;
            let p = PairParams::new(1.0, om, d0, d0 + 0.1 * extra).unwrap();
            let d = DissipativeParams::new(g1, g2).unwrap();
            let e = eigenvalues4(&build_dissipative_generator(&p, &d)).unwrap();
            let pt = SpectrumPoint { coupling: om, eigenvalues: e };
            prop_assert!(pt.conjugation_defect() < 1e-10);
        }

        #[test]
        fn mode_frequency_identity(i in 0usize..50) {
            let om = 2.0 * i as f64 / 49.0;
            let p = PairParams::with_default_diamagnetic(1.0, om).unwrap();
            let e = eigenvalues4(&build_dissipative_generator(&p, &DissipativeParams::lossless())).unwrap();
            let (ws, wa) = crate::analytic::mode_frequencies(1.0, om);
            let want = [ws, wa, -wa, -ws];
            for (z, w) in e.iter().zip(want) {
                prop_assert!((z - I * w).norm() < 1e-10);
            }
        }
    }
}
