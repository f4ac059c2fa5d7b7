use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{propagate_with, DynamicsError, Engine, Recorder, SeriesMeta, TimeGrid, TimeSeries};
use crate::analytic::mode_frequencies;
use crate::model::{
    build_dissipative_generator, printed_to_state_order, ArrowSystem, DissipativeParams, EnergyForm, PairParams,
    ReservoirParams, StateLayout, TotalState,
};
use crate::C64;

pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 32;
pub const MIN_SAMPLES_PER_PERIOD: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    /// Defaults to `a1 = 1`, everything else empty.
    pub initial: Option<TotalState>,
    /// Samples per period of the symmetric mode.
    pub samples_per_period: usize,
    /// Defaults to the revival time.
    pub t_end: Option<f64>,
    pub engine: Engine,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { initial: None, samples_per_period: DEFAULT_SAMPLES_PER_PERIOD, t_end: None, engine: Engine::default() }
    }
}

/// Revival time of a pair of reservoirs: the earlier of the two.
pub(crate) fn pair_revival_time(r1: &ReservoirParams, r2: &ReservoirParams) -> Result<f64, DynamicsError> {
    Ok(r1.revival_time()?.min(r2.revival_time()?))
}

/// Sampling grid resolving the fastest system mode.
pub(crate) fn sampling_grid(p: &PairParams, t_end: f64, samples_per_period: usize) -> Result<TimeGrid, DynamicsError> {
    if samples_per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(DynamicsError::InvalidGrid(format!(
            "need at least {MIN_SAMPLES_PER_PERIOD} samples per period, got {samples_per_period}"
        )));
    }
    let (ws, _) = mode_frequencies(p.omega0(), p.coupling());
    TimeGrid::with_max_step(t_end, 2.0 * PI / (ws * samples_per_period as f64))
}

/// Simulates the pair coupled to both reservoirs, recording `a1`, `a2` and the
/// classical energy.
pub fn simulate_pair(
    p: &PairParams,
    r1: &ReservoirParams,
    r2: &ReservoirParams,
    opts: &SimulationOptions,
) -> Result<TimeSeries, DynamicsError> {
    let sys = ArrowSystem::new(p, r1, r2);
    let layout = sys.layout();
    let t_r = pair_revival_time(r1, r2)?;
    let t_end = opts.t_end.unwrap_or(t_r);
    let grid = sampling_grid(p, t_end, opts.samples_per_period)?;
    let s0 = match &opts.initial {
        Some(s) if s.layout() == layout => s.clone(),
        Some(s) => {
            return Err(DynamicsError::DimensionMismatch { expected: layout.dim(), found: s.amplitudes().len() })
        }
        None => TotalState::default_initial(layout),
    };
    let g = crate::model::arrow_generator(&sys);
    let energy = EnergyForm::new(sys.clone());
    let eval = |x: &[C64]| energy.eval_amplitudes(x);
    let meta = SeriesMeta {
        method: format!("{:?}", opts.engine),
        dim: layout.dim(),
        dt: grid.dt(),
        t_end,
        revival_time: Some(t_r),
        nonpositive_modes: sys.nonpositive_modes(),
        oracle_condition: None,
    };
    let mut rec = Recorder::new(layout, grid.len(), meta, Some(&eval));
    propagate_with(&g, s0.amplitudes(), &grid, opts.engine, |_, t, x| rec.record(t, x))?;
    Ok(rec.finish())
}

/// The phenomenologically damped pair on `grid`, started from `(a1, a2)`.
pub fn damped_pair_series(
    p: &PairParams,
    d: &DissipativeParams,
    a1: C64,
    a2: C64,
    grid: &TimeGrid,
) -> Result<TimeSeries, DynamicsError> {
    let m = printed_to_state_order(&build_dissipative_generator(p, d));
    let g = DMatrix::from_iterator(4, 4, m.iter().copied());
    let layout = StateLayout::new(0, 0);
    let s0 = TotalState::with_system(layout, a1, a2);
    let meta = SeriesMeta {
        method: "DampedPair".into(),
        dim: 4,
        dt: grid.dt(),
        t_end: grid.t_end(),
        ..Default::default()
    };
    let mut rec = Recorder::new(layout, grid.len(), meta, None);
    propagate_with(&g, s0.amplitudes(), grid, Engine::Exponential, |_, t, x| rec.record(t, x))?;
    Ok(rec.finish())
}
