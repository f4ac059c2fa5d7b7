//! Time steppers for `ẋ = G x`.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, TimeGrid};
use crate::model::LinearGenerator;
use crate::C64;

/// Propagation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Truncated Taylor series of `exp(G h)` with `‖G‖h <= 1` per substep.
    /// Exact to rounding for any `G`, including defective ones.
    #[default]
    Exponential,
    /// Adaptive Dormand–Prince 5(4).
    DormandPrince,
}

/// Largest `‖G‖·h` accepted for one Taylor substep.
const TAYLOR_THETA: f64 = 1.0;
const TAYLOR_MAX_TERMS: usize = 60;

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Steps `x` through every point of `grid`, calling `observe(i, t, x)` at each
/// sample (including `t = 0`).
pub fn propagate_with<G, F>(
    g: &G,
    x0: &[C64],
    grid: &TimeGrid,
    engine: Engine,
    mut observe: F,
) -> Result<(), DynamicsError>
where
    G: LinearGenerator + ?Sized,
    F: FnMut(usize, f64, &[C64]),
{
    if x0.len() != g.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: g.dim(), found: x0.len() });
    }
    let mut x = x0.to_vec();
    observe(0, 0.0, &x);
    match engine {
        Engine::Exponential => {
            let mut stepper = TaylorStepper::new(g, grid.dt());
            for i in 1..=grid.intervals() {
                stepper.step(g, &mut x, grid.time(i))?;
                observe(i, grid.time(i), &x);
            }
        }
        Engine::DormandPrince => {
            let mut dp = DormandPrince::new(g.dim(), grid.dt());
            for i in 1..=grid.intervals() {
                dp.advance(g, &mut x, grid.time(i - 1), grid.time(i))?;
                observe(i, grid.time(i), &x);
            }
        }
    }
    Ok(())
}

struct TaylorStepper {
    substeps: usize,
    h: f64,
    term: Vec<C64>,
    next: Vec<C64>,
    sum: Vec<C64>,
}

impl TaylorStepper {
    fn new<G: LinearGenerator + ?Sized>(g: &G, dt: f64) -> Self {
        let scaled = g.norm_bound() * dt;
        let substeps = ((scaled / TAYLOR_THETA).ceil() as usize).max(1);
        let n = g.dim();
        Self {
            substeps,
            h: dt / substeps as f64,
            term: vec![C64::new(0.0, 0.0); n],
            next: vec![C64::new(0.0, 0.0); n],
            sum: vec![C64::new(0.0, 0.0); n],
        }
    }

    fn step<G: LinearGenerator + ?Sized>(&mut self, g: &G, x: &mut [C64], t: f64) -> Result<(), DynamicsError> {
        for _ in 0..self.substeps {
            self.term.copy_from_slice(x);
            self.sum.copy_from_slice(x);
            let mut small = 0;
            let mut converged = false;
            for k in 1..=TAYLOR_MAX_TERMS {
                g.apply(&self.term, &mut self.next);
                let f = self.h / k as f64;
                for (t, n) in self.term.iter_mut().zip(&self.next) {
                    *t = n * f;
                }
                for (s, t) in self.sum.iter_mut().zip(&self.term) {
                    *s += t;
                }
                let tn = max_abs(&self.term);
                if tn <= f64::EPSILON * 0.05 * max_abs(&self.sum) {
                    small += 1;
                    // two consecutive negligible terms guard against an
                    // accidental cancellation in a single one
                    if small == 2 {
                        converged = true;
                        break;
                    }
                } else {
                    small = 0;
                }
            }
            if !converged {
                return Err(DynamicsError::StepSizeFailure { time: t });
            }
            x.copy_from_slice(&self.sum);
        }
        Ok(())
    }
}

/// Dormand–Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

pub(crate) const DP_RTOL: f64 = 1e-12;
pub(crate) const DP_ATOL: f64 = 1e-14;
const DP_MAX_STEPS: usize = 10_000_000;

struct DormandPrince {
    h: f64,
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    steps: usize,
}

impl DormandPrince {
    fn new(n: usize, dt: f64) -> Self {
        Self { h: dt, k: vec![vec![C64::new(0.0, 0.0); n]; 7], stage: vec![C64::new(0.0, 0.0); n], steps: 0 }
    }

    fn advance<G: LinearGenerator + ?Sized>(
        &mut self,
        g: &G,
        x: &mut [C64],
        t0: f64,
        t1: f64,
    ) -> Result<(), DynamicsError> {
        let n = x.len();
        let mut t = t0;
        g.apply(x, &mut self.k[0]);
        while t < t1 {
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            if h <= 1e-14 * t1.abs().max(1.0) && !last {
                return Err(DynamicsError::StepSizeFailure { time: t });
            }
            for s in 0..6 {
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, a) in A[s].iter().enumerate().take(s + 1) {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.stage[i] = x[i] + acc * h;
                }
                g.apply(&self.stage, &mut self.k[s + 1]);
            }
            // stage now holds the fifth-order solution and k[6] = G·stage
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (j, ej) in E.iter().enumerate() {
                    if *ej != 0.0 {
                        e += self.k[j][i] * *ej;
                    }
                }
                let sc = DP_ATOL + DP_RTOL * x[i].norm().max(self.stage[i].norm());
                err = err.max((e * h).norm() / sc);
            }
            self.steps += 1;
            if self.steps > DP_MAX_STEPS || !err.is_finite() {
                return Err(DynamicsError::StepSizeFailure { time: t });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                x.copy_from_slice(&self.stage);
                self.k.swap(0, 6);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || err > 1.0 {
                self.h = h * factor;
            }
            if self.h <= 1e-14 * t1.abs().max(1.0) {
                return Err(DynamicsError::StepSizeFailure { time: t });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn rotation(w: f64) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[C64::new(0.0, -w), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, w)])
    }

    #[test]
    fn zero_generator_keeps_state() {
        let g = DMatrix::<C64>::zeros(3, 3);
        let x0 = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)];
        for engine in [Engine::Exponential, Engine::DormandPrince] {
            propagate_with(&g, &x0, &TimeGrid::new(10.0, 20).unwrap(), engine, |_, _, x| assert_eq!(x, &x0[..]))
                .unwrap();
        }
    }

    #[test]
    fn phase_rotation() {
        let g = rotation(1.0);
        let x0 = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let grid = TimeGrid::new(200.0, 400).unwrap();
        for engine in [Engine::Exponential, Engine::DormandPrince] {
            propagate_with(&g, &x0, &grid, engine, |_, t, x| {
                let want = C64::new(0.0, -t).exp();
                assert!((x[0] - want).norm() < 1e-9, "{engine:?} t={t}");
                assert!((x[0].norm() - 1.0).abs() < 1e-10);
            })
            .unwrap();
        }
    }

    #[test]
    fn defective_generator() {
        // Jordan block: x(t) = (x0 + t y0, y0)
        let g = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(1.0, 0.0),
            C64::new(0.0, 0.0), C64::new(0.0, 0.0),
        ]);
        let x0 = vec![C64::new(1.0, 0.0), C64::new(0.5, 0.0)];
        propagate_with(&g, &x0, &TimeGrid::new(4.0, 4).unwrap(), Engine::Exponential, |_, t, x| {
            assert!((x[0] - C64::new(1.0 + 0.5 * t, 0.0)).norm() < 1e-14);
        })
        .unwrap();
    }

    #[test]
    fn dimension_mismatch() {
        let g = rotation(1.0);
        let r = propagate_with(&g, &[C64::new(1.0, 0.0)], &TimeGrid::new(1.0, 1).unwrap(), Engine::Exponential, |_, _, _| {});
        assert!(matches!(r, Err(DynamicsError::DimensionMismatch { .. })));
    }
}
