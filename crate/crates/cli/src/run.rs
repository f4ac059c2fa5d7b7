//! The four run modes. Each returns typed results; `artifact` turns them
//! into files.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use usc_relax_core::analytic::{analytic_lambda, mode_frequencies};
use usc_relax_core::dynamics::{
    damped_pair_series, find_revival, relative_rms_deviation, simulate_pair, sliding_max, Revival, SimulationOptions,
    TimeGrid, TimeSeries,
};
use usc_relax_core::estimation::{estimate_modes, fit_exponential_law, EstimationOptions, ExpLawFit};
use usc_relax_core::model::{PairParams, StateLayout, TotalState};
use usc_relax_core::spectrum::{find_exceptional_point, sweep_spectrum, ExceptionalPoint, SpectrumPoint};

use crate::config::Resolved;
use crate::output::{gnuplot_preamble, Artifact, Cell, Table};
use crate::CliError;

/// Fraction of the revival time over which the envelope comparison runs.
pub const COMPARE_WINDOW: f64 = 0.8;

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Stable identifier of one simulation: a hash of the resolved configuration
/// (less its output and description fields) and the coupling it ran at.
pub fn run_id(resolved: &Resolved, coupling: f64) -> String {
    let mut cfg = resolved.config.clone();
    cfg.output = Default::default();
    cfg.description = None;
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&cfg).expect("config serializes"));
    h.update(coupling.to_bits().to_le_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn base_meta(resolved: &Resolved) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("usc-relax"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("mode".into(), json!(resolved.config.mode.name()));
    m.insert("config".into(), serde_json::to_value(&resolved.config).expect("config serializes"));
    m
}

fn simulation_options(resolved: &Resolved, layout: StateLayout, t_r: f64) -> SimulationOptions {
    let s = &resolved.config.simulation;
    let (a1, a2) = resolved.initial_amplitudes();
    SimulationOptions {
        initial: Some(TotalState::with_system(layout, a1, a2)),
        samples_per_period: s.samples_per_period,
        t_end: Some(s.t_end_factor * t_r),
        engine: s.engine,
    }
}

fn simulate(resolved: &Resolved, p: &PairParams) -> Result<TimeSeries, CliError> {
    let (r1, r2) = resolved.reservoirs();
    let t_r = r1.revival_time().map_err(numerical)?.min(r2.revival_time().map_err(numerical)?);
    let opts = simulation_options(resolved, StateLayout::new(r1.n(), r2.n()), t_r);
    simulate_pair(p, &r1, &r2, &opts).map_err(numerical)
}

/// Envelope of `|a|` over one period of the slower normal mode.
fn envelope(series_abs: &[f64], dt: f64, p: &PairParams) -> Vec<f64> {
    let (_, wa) = mode_frequencies(p.omega0(), p.coupling());
    let w = if dt > 0.0 { (2.0 * PI / wa / dt).round() as usize } else { 1 };
    sliding_max(series_abs, w.max(1))
}

// ---------------------------------------------------------------- eigs

#[derive(Debug, Clone)]
pub struct EigsResult {
    pub points: Vec<SpectrumPoint>,
    pub exceptional_point: Option<ExceptionalPoint>,
    pub run_id: String,
}

pub fn run_eigs(resolved: &Resolved) -> Result<EigsResult, CliError> {
    let d = resolved.dissipative.expect("validated");
    let template = PairParams::with_default_diamagnetic(resolved.omega0, 0.0).map_err(numerical)?;
    let points = sweep_spectrum(&template, &d, &resolved.grid).map_err(numerical)?;
    let (lo, hi) = (resolved.grid[0], *resolved.grid.last().unwrap());
    let exceptional_point = if hi > lo {
        Some(find_exceptional_point(&template, &d, (lo, hi)).map_err(numerical)?)
    } else {
        None
    };
    Ok(EigsResult { points, exceptional_point, run_id: run_id(resolved, f64::NAN) })
}

impl EigsResult {
    pub fn artifact(&self, resolved: &Resolved) -> Artifact {
        let header = vec![
            "omega", "re_1", "im_1", "re_2", "im_2", "re_3", "im_3", "re_4", "im_4", "real_spread", "min_gap",
        ];
        let rows = self
            .points
            .iter()
            .map(|pt| {
                let mut r = vec![Cell::Num(pt.coupling)];
                for z in &pt.eigenvalues {
                    r.push(Cell::Num(z.re));
                    r.push(Cell::Num(z.im));
                }
                r.push(Cell::Num(pt.real_spread()));
                r.push(Cell::Num(pt.min_gap()));
                r
            })
            .collect();
        let mut meta = base_meta(resolved);
        meta.insert("run_id".into(), json!(self.run_id));
        meta.insert("rows".into(), json!(self.points.len()));
        meta.insert("exceptional_point".into(), json!(self.exceptional_point));
        let stem = resolved.stem();
        let mut plot = gnuplot_preamble(&stem, "eigenvalues of the damped pair against coupling");
        plot.push_str("set multiplot layout 1,2\nset xlabel 'Omega/omega0'\nset ylabel 'Re lambda'\n");
        plot.push_str(&format!("plot for [b=0:3] '{stem}.csv' using 1:(column(2+2*b)) with lines\n"));
        plot.push_str("set ylabel 'Im lambda'\n");
        plot.push_str(&format!("plot for [b=0:3] '{stem}.csv' using 1:(column(3+2*b)) with lines\nunset multiplot\n"));
        Artifact { stem, table: Table { header, rows }, meta: Value::Object(meta), plot }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone)]
pub struct SimulateResult {
    pub series: TimeSeries,
    pub envelope: Vec<f64>,
    pub revival: Option<Revival>,
    pub revival_time: f64,
    pub run_id: String,
}

pub fn run_simulate(resolved: &Resolved) -> Result<SimulateResult, CliError> {
    let p = resolved.pair()?;
    let series = simulate(resolved, &p)?;
    let t_r = series.meta.revival_time.unwrap_or(f64::NAN);
    let envelope = envelope(&series.abs_a1(), series.dt(), &p);
    let revival = find_revival(&series.times, &envelope, 0.5 * t_r);
    Ok(SimulateResult { series, envelope, revival, revival_time: t_r, run_id: run_id(resolved, p.coupling()) })
}

impl SimulateResult {
    pub fn artifact(&self, resolved: &Resolved) -> Artifact {
        let s = &self.series;
        let header = vec!["t", "re_a1", "im_a1", "abs_a1", "re_a2", "im_a2", "abs_a2", "envelope_a1", "energy"];
        let rows = (0..s.times.len())
            .map(|i| {
                vec![
                    Cell::Num(s.times[i]),
                    Cell::Num(s.a1[i].re),
                    Cell::Num(s.a1[i].im),
                    Cell::Num(s.a1[i].norm()),
                    Cell::Num(s.a2[i].re),
                    Cell::Num(s.a2[i].im),
                    Cell::Num(s.a2[i].norm()),
                    Cell::Num(self.envelope[i]),
                    Cell::opt(s.energy.get(i).copied()),
                ]
            })
            .collect();
        let mut meta = base_meta(resolved);
        meta.insert("run_id".into(), json!(self.run_id));
        meta.insert("series".into(), json!(s.meta));
        meta.insert("revival_time".into(), json!(self.revival_time));
        meta.insert("revival".into(), json!(self.revival));
        meta.insert("energy_drift".into(), json!(s.relative_energy_drift()));
        meta.insert("conjugacy_deviation".into(), json!(s.conjugacy_deviation));
        let stem = resolved.stem();
        let mut plot = gnuplot_preamble(&stem, "amplitude of the first oscillator");
        plot.push_str(&format!(
            "set xlabel 't*omega0'\nplot '{stem}.csv' using 1:4 with lines, '' using 1:8 with lines\n"
        ));
        Artifact { stem, table: Table { header, rows }, meta: Value::Object(meta), plot }
    }
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone)]
pub struct CompareResult {
    pub times: Vec<f64>,
    pub total_abs: Vec<f64>,
    pub damped_abs: Vec<f64>,
    pub total_envelope: Vec<f64>,
    pub damped_envelope: Vec<f64>,
    /// Relative RMS deviation of the envelopes over `[0, 0.8·T_R]`.
    pub rms_deviation: f64,
    /// Largest pointwise `| |a1|_total − |a1|_damped |`.
    pub max_trace_deviation: f64,
    pub revival_time: f64,
    pub revival: Option<Revival>,
    pub energy_drift: Option<f64>,
    pub conjugacy_deviation: f64,
    pub run_id: String,
}

pub fn run_compare(resolved: &Resolved) -> Result<CompareResult, CliError> {
    let p = resolved.pair()?;
    let d = resolved.dissipative.expect("resolved for compare");
    let series = simulate(resolved, &p)?;
    let t_r = series.meta.revival_time.unwrap_or(f64::NAN);
    let grid = TimeGrid::new(*series.times.last().unwrap(), series.times.len() - 1).map_err(numerical)?;
    let damped = damped_pair_series(&p, &d, series.a1[0], series.a2[0], &grid).map_err(numerical)?;
    let total_abs = series.abs_a1();
    let damped_abs = damped.abs_a1();
    let total_envelope = envelope(&total_abs, series.dt(), &p);
    let damped_envelope = envelope(&damped_abs, series.dt(), &p);
    let n = series.times.iter().take_while(|&&t| t <= COMPARE_WINDOW * t_r * (1.0 + 1e-12)).count();
    let rms_deviation = relative_rms_deviation(&total_envelope[..n], &damped_envelope[..n]);
    let max_trace_deviation = total_abs.iter().zip(&damped_abs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let revival = find_revival(&series.times, &total_envelope, 0.5 * t_r);
    Ok(CompareResult {
        times: series.times.clone(),
        total_abs,
        damped_abs,
        total_envelope,
        damped_envelope,
        rms_deviation,
        max_trace_deviation,
        revival_time: t_r,
        revival,
        energy_drift: series.relative_energy_drift(),
        conjugacy_deviation: series.conjugacy_deviation,
        run_id: run_id(resolved, p.coupling()),
    })
}

impl CompareResult {
    pub fn artifact(&self, resolved: &Resolved) -> Artifact {
        let header = vec!["t", "abs_a1_total", "abs_a1_damped", "envelope_total", "envelope_damped"];
        let rows = (0..self.times.len())
            .map(|i| {
                vec![
                    Cell::Num(self.times[i]),
                    Cell::Num(self.total_abs[i]),
                    Cell::Num(self.damped_abs[i]),
                    Cell::Num(self.total_envelope[i]),
                    Cell::Num(self.damped_envelope[i]),
                ]
            })
            .collect();
        let mut meta = base_meta(resolved);
        meta.insert("run_id".into(), json!(self.run_id));
        meta.insert("comparison_window".into(), json!(COMPARE_WINDOW));
        meta.insert("rms_envelope_deviation".into(), json!(self.rms_deviation));
        meta.insert("max_trace_deviation".into(), json!(self.max_trace_deviation));
        meta.insert("revival_time".into(), json!(self.revival_time));
        meta.insert("revival".into(), json!(self.revival));
        meta.insert("energy_drift".into(), json!(self.energy_drift));
        meta.insert("conjugacy_deviation".into(), json!(self.conjugacy_deviation));
        let stem = resolved.stem();
        let mut plot = gnuplot_preamble(&stem, "|a1| from the reservoir model and from the damped pair");
        plot.push_str(&format!(
            "set xlabel 't*omega0'\nplot '{stem}.csv' using 1:2 with lines lc rgb 'red', '' using 1:3 with lines lc rgb 'black'\n"
        ));
        Artifact { stem, table: Table { header, rows }, meta: Value::Object(meta), plot }
    }
}

// ---------------------------------------------------------------- rates

/// One coupling value of a rate sweep. Missing numbers mean the step failed;
/// the reason is in `diagnostics`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub gamma_s_num: Option<f64>,
    pub gamma_a_num: Option<f64>,
    pub gamma_s_analytic: Option<f64>,
    pub gamma_a_analytic: Option<f64>,
    pub omega_s_meas: Option<f64>,
    pub omega_a_meas: Option<f64>,
    pub omega_s_analytic: f64,
    pub omega_a_analytic: f64,
    pub fit_residual: Option<f64>,
    pub bin_width: Option<f64>,
    pub energy_drift: Option<f64>,
    pub conjugacy_deviation: Option<f64>,
    pub run_id: String,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Exponential-law fits of the numerical `(γ_s, γ_a)` over the law range,
    /// for flat dispersion only.
    pub law: Option<(Result<ExpLawFit, String>, Result<ExpLawFit, String>)>,
}

fn rate_row(resolved: &Resolved, omega: f64) -> SweepRow {
    let (r1, r2) = resolved.reservoirs();
    let w0 = resolved.omega0;
    let (ws, wa) = mode_frequencies(w0, omega);
    let mut row = SweepRow {
        omega,
        gamma_s_num: None,
        gamma_a_num: None,
        gamma_s_analytic: None,
        gamma_a_analytic: None,
        omega_s_meas: None,
        omega_a_meas: None,
        omega_s_analytic: ws,
        omega_a_analytic: wa,
        fit_residual: None,
        bin_width: None,
        energy_drift: None,
        conjugacy_deviation: None,
        run_id: run_id(resolved, omega),
        diagnostics: Vec::new(),
    };
    let nonpositive = r1.nonpositive_modes(w0) + r2.nonpositive_modes(w0);
    if nonpositive > 0 {
        row.diagnostics.push(format!("nonpositive_reservoir_modes={nonpositive}"));
    }
    let top = r1.frequencies(w0).last().copied().unwrap_or(0.0).min(r2.frequencies(w0).last().copied().unwrap_or(0.0));
    if ws > top {
        row.diagnostics.push("symmetric_mode_above_band".into());
    }
    let p = match PairParams::with_default_diamagnetic(w0, omega) {
        Ok(p) => p,
        Err(e) => {
            row.diagnostics.push(format!("pair: {e}"));
            return row;
        }
    };
    match analytic_lambda(&p, &r1, &r2) {
        Ok(a) => {
            row.gamma_s_analytic = Some(a.gamma_s);
            row.gamma_a_analytic = Some(a.gamma_a);
            if a.branch_swapped {
                row.diagnostics.push("analytic_branch_swapped".into());
            }
        }
        Err(e) => row.diagnostics.push(format!("analytic: {e}")),
    }
    let series = match simulate(resolved, &p) {
        Ok(s) => s,
        Err(e) => {
            row.diagnostics.push(format!("simulation: {e}"));
            return row;
        }
    };
    row.energy_drift = series.relative_energy_drift();
    row.conjugacy_deviation = Some(series.conjugacy_deviation);
    let e = &resolved.config.estimation;
    let opts = EstimationOptions { window_fraction: e.window_fraction, n_modes: e.n_modes, method: e.method };
    match estimate_modes(&series, &opts) {
        Ok(r) => {
            row.gamma_s_num = Some(r.gamma_s);
            row.gamma_a_num = Some(r.gamma_a);
            row.omega_s_meas = Some(r.omega_s);
            row.omega_a_meas = Some(r.omega_a);
            row.fit_residual = Some(r.residual).filter(|v| v.is_finite());
            row.bin_width = Some(r.bin_width);
            if r.flagged {
                row.diagnostics.push("fit_residual_above_limit".into());
            }
            if (r.omega_s - ws).abs() > r.bin_width || (r.omega_a - wa).abs() > r.bin_width {
                row.diagnostics.push("frequency_shift_above_bin".into());
            }
        }
        Err(e) => row.diagnostics.push(format!("estimator: {e}")),
    }
    row
}

/// Simulates every grid point on a pool of `jobs` workers; rows come back in
/// grid order whatever the completion order.
pub fn run_rates(resolved: &Resolved, jobs: usize) -> Result<SweepTable, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Numerical(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| resolved.grid.par_iter().map(|&om| rate_row(resolved, om)).collect());
    if rows.iter().all(|r| r.gamma_s_num.is_none()) {
        let why = rows.first().map(|r| r.diagnostics.join("; ")).unwrap_or_default();
        return Err(CliError::Numerical(format!("no grid point produced rates ({why})")));
    }
    let (r1, r2) = resolved.reservoirs();
    let flat = r1.dispersion().exponent == 0.0 && r2.dispersion().exponent == 0.0;
    let law = flat.then(|| {
        let [lo, hi] = resolved.config.estimation.law_range;
        let pick = |f: fn(&SweepRow) -> Option<f64>| -> Result<ExpLawFit, String> {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.omega >= lo - 1e-12 && r.omega <= hi + 1e-12)
                .filter_map(|r| f(r).map(|g| (r.omega, g)))
                .collect();
            fit_exponential_law(&pts).map_err(|e| e.to_string())
        };
        (pick(|r| r.gamma_s_num), pick(|r| r.gamma_a_num))
    });
    Ok(SweepTable { rows, law })
}

impl SweepTable {
    pub fn to_table(&self) -> Table {
        let header = vec![
            "omega",
            "gamma_s_num",
            "gamma_a_num",
            "gamma_s_analytic",
            "gamma_a_analytic",
            "omega_s_meas",
            "omega_a_meas",
            "omega_s_analytic",
            "omega_a_analytic",
            "fit_residual",
            "energy_drift",
            "conjugacy_deviation",
            "run_id",
            "diagnostics",
        ];
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.omega),
                    Cell::opt(r.gamma_s_num),
                    Cell::opt(r.gamma_a_num),
                    Cell::opt(r.gamma_s_analytic),
                    Cell::opt(r.gamma_a_analytic),
                    Cell::opt(r.omega_s_meas),
                    Cell::opt(r.omega_a_meas),
                    Cell::Num(r.omega_s_analytic),
                    Cell::Num(r.omega_a_analytic),
                    Cell::opt(r.fit_residual),
                    Cell::opt(r.energy_drift),
                    Cell::opt(r.conjugacy_deviation),
                    Cell::Text(r.run_id.clone()),
                    Cell::Text(r.diagnostics.join("; ")),
                ]
            })
            .collect();
        Table { header, rows }
    }

    pub fn artifact(&self, resolved: &Resolved) -> Artifact {
        let mut meta = base_meta(resolved);
        meta.insert("rate_method".into(), json!(resolved.config.estimation.method));
        meta.insert("rows".into(), json!(self.rows.len()));
        meta.insert("run_ids".into(), json!(self.rows.iter().map(|r| &r.run_id).collect::<Vec<_>>()));
        meta.insert(
            "failed_rows".into(),
            json!(self.rows.iter().filter(|r| r.gamma_s_num.is_none()).map(|r| r.omega).collect::<Vec<_>>()),
        );
        let law_json = |r: &Result<ExpLawFit, String>| match r {
            Ok(f) => json!(f),
            Err(e) => json!({ "error": e }),
        };
        meta.insert(
            "exponential_law".into(),
            match &self.law {
                Some((s, a)) => json!({
                    "range": resolved.config.estimation.law_range,
                    "symmetric": law_json(s),
                    "antisymmetric": law_json(a),
                }),
                None => Value::Null,
            },
        );
        let stem = resolved.stem();
        let mut plot = gnuplot_preamble(&stem, "relaxation rates against coupling");
        plot.push_str(&format!(
            "set xlabel 'Omega/omega0'\nset ylabel 'gamma/omega0'\nplot '{stem}.csv' using 1:2 with linespoints lc rgb 'blue', \\\n  '' using 1:3 with linespoints lc rgb 'red', \\\n  '' using 1:4 with lines dt 2 lc rgb 'blue', \\\n  '' using 1:5 with lines dt 2 lc rgb 'red'\n"
        ));
        Artifact { stem, table: self.to_table(), meta: Value::Object(meta), plot }
    }
}
