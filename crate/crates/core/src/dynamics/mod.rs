//! Time evolution of the full reservoir model and of the damped pair.

mod engine;
mod envelope;
mod oracle;
mod simulate;

pub use engine::{propagate_with, Engine};
pub use envelope::{find_revival, relative_rms_deviation, sliding_max, Revival};
pub use oracle::{SpectralPropagator, ORACLE_MAX_DIM};
pub use simulate::{damped_pair_series, simulate_pair, SimulationOptions, DEFAULT_SAMPLES_PER_PERIOD};

pub use crate::model::revival_time;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::{LinearGenerator, ModelError, StateLayout, TotalState};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("step-size failure at t = {time}")]
    StepSizeFailure { time: f64 },
    #[error("state has dimension {found}, generator expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("dimension {0} is too large for the dense spectral oracle")]
    OracleTooLarge(usize),
}

/// Uniform grid `t_i = i·t_end/n`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t_end: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, intervals: usize) -> Result<Self, DynamicsError> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(DynamicsError::InvalidGrid(format!("end time must be finite and non-negative, got {t_end}")));
        }
        if intervals == 0 && t_end > 0.0 {
            return Err(DynamicsError::InvalidGrid("a non-empty interval needs at least one step".into()));
        }
        Ok(Self { t_end, intervals })
    }

    /// Smallest grid over `[0, t_end]` whose spacing does not exceed `max_dt`.
    pub fn with_max_step(t_end: f64, max_dt: f64) -> Result<Self, DynamicsError> {
        if !(max_dt.is_finite() && max_dt > 0.0) {
            return Err(DynamicsError::InvalidGrid(format!("step must be positive, got {max_dt}")));
        }
        Self::new(t_end, ((t_end / max_dt).ceil() as usize).max(1))
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        if self.intervals == 0 {
            0.0
        } else {
            self.t_end / self.intervals as f64
        }
    }

    pub fn time(&self, i: usize) -> f64 {
        if self.intervals == 0 {
            0.0
        } else {
            self.t_end * i as f64 / self.intervals as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

/// Provenance of a time series.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SeriesMeta {
    pub method: String,
    pub dim: usize,
    pub dt: f64,
    pub t_end: f64,
    pub revival_time: Option<f64>,
    pub nonpositive_modes: usize,
    pub oracle_condition: Option<f64>,
}

/// Sampled amplitudes of the two oscillators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    /// Classical energy per sample; empty when not evaluated.
    pub energy: Vec<f64>,
    /// Largest conjugate-pairing defect seen along the trajectory.
    pub conjugacy_deviation: f64,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `max |E(t) − E(0)| / |E(0)|`, or `None` without energy samples.
    pub fn relative_energy_drift(&self) -> Option<f64> {
        let e0 = *self.energy.first()?;
        let dev = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        Some(if e0 != 0.0 { dev / e0.abs() } else { dev })
    }

    pub fn abs_a1(&self) -> Vec<f64> {
        self.a1.iter().map(|z| z.norm()).collect()
    }

    /// Samples with `t <= t_max`.
    pub fn truncated(&self, t_max: f64) -> TimeSeries {
        let n = self.times.iter().take_while(|&&t| t <= t_max * (1.0 + 1e-12)).count();
        TimeSeries {
            times: self.times[..n].to_vec(),
            a1: self.a1[..n].to_vec(),
            a2: self.a2[..n].to_vec(),
            energy: if self.energy.len() >= n { self.energy[..n].to_vec() } else { Vec::new() },
            conjugacy_deviation: self.conjugacy_deviation,
            meta: self.meta.clone(),
        }
    }
}

pub(crate) struct Recorder<'a> {
    layout: StateLayout,
    series: TimeSeries,
    energy: Option<&'a dyn Fn(&[C64]) -> f64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(layout: StateLayout, len: usize, meta: SeriesMeta, energy: Option<&'a dyn Fn(&[C64]) -> f64>) -> Self {
        Self {
            layout,
            series: TimeSeries {
                times: Vec::with_capacity(len),
                a1: Vec::with_capacity(len),
                a2: Vec::with_capacity(len),
                energy: Vec::with_capacity(if energy.is_some() { len } else { 0 }),
                conjugacy_deviation: 0.0,
                meta,
            },
            energy,
        }
    }

    pub(crate) fn record(&mut self, t: f64, x: &[C64]) {
        let s = &mut self.series;
        s.times.push(t);
        s.a1.push(x[StateLayout::A1]);
        s.a2.push(x[StateLayout::A2]);
        let dev = crate::model::state_conjugacy_deviation(&self.layout, x);
        s.conjugacy_deviation = s.conjugacy_deviation.max(dev);
        if let Some(f) = self.energy {
            s.energy.push(f(x));
        }
    }

    pub(crate) fn finish(self) -> TimeSeries {
        self.series
    }
}

fn check_state(g_dim: usize, s0: &TotalState) -> Result<(), DynamicsError> {
    if s0.amplitudes().len() != g_dim {
        return Err(DynamicsError::DimensionMismatch { expected: g_dim, found: s0.amplitudes().len() });
    }
    Ok(())
}

/// Integrates `d(state)/dt = G·state` on `grid` with the chosen engine.
pub fn propagate<G: LinearGenerator + ?Sized>(
    g: &G,
    s0: &TotalState,
    grid: &TimeGrid,
    engine: Engine,
) -> Result<TimeSeries, DynamicsError> {
    check_state(g.dim(), s0)?;
    let meta = SeriesMeta {
        method: format!("{engine:?}"),
        dim: g.dim(),
        dt: grid.dt(),
        t_end: grid.t_end(),
        ..Default::default()
    };
    let mut rec = Recorder::new(s0.layout(), grid.len(), meta, None);
    propagate_with(g, s0.amplitudes(), grid, engine, |_, t, x| rec.record(t, x))?;
    Ok(rec.finish())
}

/// Solution through the eigendecomposition of `G`.
///
/// Fails with [`LinalgError::IllConditioned`] when the eigenbasis condition
/// estimate exceeds `1e12`; callers then fall back to [`propagate`].
pub fn propagate_oracle(g: &DMatrix<C64>, s0: &TotalState, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    check_state(g.nrows(), s0)?;
    let prop = SpectralPropagator::new(g)?;
    let coeffs = prop.coefficients(s0.amplitudes());
    let meta = SeriesMeta {
        method: "Spectral".into(),
        dim: g.nrows(),
        dt: grid.dt(),
        t_end: grid.t_end(),
        oracle_condition: Some(prop.condition()),
        ..Default::default()
    };
    let mut rec = Recorder::new(s0.layout(), grid.len(), meta, None);
    for t in grid.times() {
        rec.record(t, &prop.evaluate(&coeffs, t));
    }
    Ok(rec.finish())
}

/// Full state vectors on `grid`, for comparisons at small dimension.
pub fn propagate_states<G: LinearGenerator + ?Sized>(
    g: &G,
    x0: &[C64],
    grid: &TimeGrid,
    engine: Engine,
) -> Result<Vec<Vec<C64>>, DynamicsError> {
    let mut out = Vec::with_capacity(grid.len());
    propagate_with(g, x0, grid, engine, |_, _, x| out.push(x.to_vec()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = TimeGrid::with_max_step(10.0, 0.3).unwrap();
        assert_eq!(g.intervals(), 34);
        assert!(g.dt() <= 0.3);
        assert_eq!(g.time(34), 10.0);
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert_eq!(TimeGrid::new(0.0, 0).unwrap().times(), vec![0.0]);
    }
}
