//! Levenberg–Marquardt fit of `y(t) ≈ Σ_j A_j e^{(−γ_j + iν_j) t}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampedMode {
    pub gamma: f64,
    pub nu: f64,
    pub amplitude: C64,
}

impl DampedMode {
    pub fn exponent(&self) -> C64 {
        C64::new(-self.gamma, self.nu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub modes: Vec<DampedMode>,
    /// `‖model − y‖₂ / ‖y‖₂`
    pub residual: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 400;

/// Signal samples `y[n]` at `t_n = n·dt`.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub y: &'a [C64],
    pub dt: f64,
}

impl Samples<'_> {
    fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    fn norm_sqr(&self) -> f64 {
        self.y.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Basis columns `e^{(−γ_j + iν_j) t_n}`.
fn basis(s: &Samples, rates: &[(f64, f64)]) -> Vec<Vec<C64>> {
    rates
        .iter()
        .map(|&(g, nu)| (0..s.y.len()).map(|n| (C64::new(-g, nu) * s.t(n)).exp()).collect())
        .collect()
}

/// Least-squares amplitudes for fixed exponents.
pub fn linear_amplitudes(s: &Samples, rates: &[(f64, f64)]) -> Vec<C64> {
    let z = basis(s, rates);
    let m = rates.len();
    let mut gram = DMatrix::<C64>::zeros(m, m);
    let mut rhs = DVector::<C64>::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v: C64 = z[i].iter().zip(&z[j]).map(|(a, b)| a.conj() * b).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
        rhs[i] = z[i].iter().zip(s.y).map(|(a, b)| a.conj() * b).sum();
    }
    // tiny ridge keeps coincident seeds solvable
    let trace: f64 = (0..m).map(|i| gram[(i, i)].re).sum::<f64>() / m.max(1) as f64;
    for i in 0..m {
        gram[(i, i)] += C64::new(1e-14 * trace, 0.0);
    }
    match gram.lu().solve(&rhs) {
        Some(a) => a.iter().copied().collect(),
        None => vec![C64::new(0.0, 0.0); m],
    }
}

fn cost(s: &Samples, modes: &[DampedMode]) -> f64 {
    let mut c = 0.0;
    for (n, y) in s.y.iter().enumerate() {
        let t = s.t(n);
        let f: C64 = modes.iter().map(|m| m.amplitude * (m.exponent() * t).exp()).sum();
        c += (f - y).norm_sqr();
    }
    c
}

/// Normal equations `JᵀJ` and `Jᵀr` over the real parameter vector
/// `(γ_j, ν_j, Re A_j, Im A_j)_j`.
fn normal_equations(s: &Samples, modes: &[DampedMode]) -> (DMatrix<f64>, DVector<f64>) {
    let np = 4 * modes.len();
    let mut jtj = DMatrix::<f64>::zeros(np, np);
    let mut jtr = DVector::<f64>::zeros(np);
    let mut col = vec![C64::new(0.0, 0.0); np];
    for (n, y) in s.y.iter().enumerate() {
        let t = s.t(n);
        let mut f = C64::new(0.0, 0.0);
        for (j, m) in modes.iter().enumerate() {
            let e = (m.exponent() * t).exp();
            let ae = m.amplitude * e;
            f += ae;
            col[4 * j] = -ae * t;
            col[4 * j + 1] = C64::new(0.0, t) * ae;
            col[4 * j + 2] = e;
            col[4 * j + 3] = C64::new(0.0, 1.0) * e;
        }
        let r = f - y;
        for p in 0..np {
            let cp = col[p].conj();
            jtr[p] += (cp * r).re;
            for q in p..np {
                jtj[(p, q)] += (cp * col[q]).re;
            }
        }
    }
    for p in 0..np {
        for q in 0..p {
            jtj[(p, q)] = jtj[(q, p)];
        }
    }
    (jtj, jtr)
}

fn apply_step(modes: &[DampedMode], delta: &DVector<f64>) -> Vec<DampedMode> {
    modes
        .iter()
        .enumerate()
        .map(|(j, m)| DampedMode {
            gamma: m.gamma + delta[4 * j],
            nu: m.nu + delta[4 * j + 1],
            amplitude: m.amplitude + C64::new(delta[4 * j + 2], delta[4 * j + 3]),
        })
        .collect()
}

/// Fits damped modes starting from `(γ, ν)` seeds; amplitudes are
/// initialised by linear least squares.
pub fn fit_damped_modes(s: &Samples, seeds: &[(f64, f64)]) -> FitResult {
    let amps = linear_amplitudes(s, seeds);
    let mut modes: Vec<DampedMode> = seeds
        .iter()
        .zip(amps)
        .map(|(&(gamma, nu), amplitude)| DampedMode { gamma, nu, amplitude })
        .collect();
    let ynorm = s.norm_sqr().max(f64::MIN_POSITIVE);
    let mut c = cost(s, &modes);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let np = 4 * modes.len();
    while iterations < MAX_ITER {
        iterations += 1;
        let (jtj, jtr) = normal_equations(s, &modes);
        // floor keeps silent modes (zero amplitude) from making the system singular
        let floor = 1e-12 * (0..np).map(|p| jtj[(p, p)]).fold(0.0, f64::max);
        let mut improved = false;
        let mut tiny_step = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for p in 0..np {
                a[(p, p)] += lambda * jtj[(p, p)].max(floor).max(1e-300);
            }
            let Some(delta) = a.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = apply_step(&modes, &delta);
            let ct = cost(s, &trial);
            if ct.is_finite() && ct <= c {
                let rel_gain = (c - ct) / ynorm;
                let step_small = modes.iter().zip(&trial).all(|(m, t)| {
                    (m.gamma - t.gamma).abs() <= 1e-14 * (1.0 + m.gamma.abs())
                        && (m.nu - t.nu).abs() <= 1e-14 * (1.0 + m.nu.abs())
                });
                modes = trial;
                c = ct;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                tiny_step = step_small || rel_gain < 1e-30;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved || tiny_step {
            break;
        }
    }
    FitResult { modes, residual: (c / ynorm).sqrt(), iterations }
}

/// Samples of `Σ_j A_j e^{(−γ_j + iν_j) n dt}`.
pub fn synthesize(modes: &[DampedMode], n: usize, dt: f64) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            modes.iter().map(|m| m.amplitude * (m.exponent() * t).exp()).sum()
        })
        .collect()
}
