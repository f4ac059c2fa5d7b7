//! Run configuration: a single JSON document, validated field by field and
//! resolved into the core parameter types.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use usc_relax_core::dynamics::{Engine, DEFAULT_SAMPLES_PER_PERIOD};
use usc_relax_core::estimation::{RateMethod, DEFAULT_N_MODES, DEFAULT_WINDOW_FRACTION};
use usc_relax_core::model::{DiamagneticPolicy, DispersionLaw, DissipativeParams, PairParams, ReservoirParams};
use usc_relax_core::C64;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Eigs,
    Simulate,
    Rates,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eigs => "eigs",
            Mode::Simulate => "simulate",
            Mode::Rates => "rates",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Free text carried into the metadata, e.g. where parameters came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub pair: PairConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoirs: Option<[ReservoirConfig; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipative: Option<DissipativeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_grid: Option<GridConfig>,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    #[serde(default = "one")]
    pub omega0: f64,
    /// Coupling Ω for single-point modes (`simulate`, `compare`).
    #[serde(default)]
    pub coupling: f64,
    /// Diamagnetic coefficients; `Ω²/ω0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self { omega0: 1.0, coupling: 0.0, d1: None, d2: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n: usize,
    pub delta_omega: f64,
    /// Dispersion exponent `s` in `g(ω) = g0·|ω/ω0|^s`.
    #[serde(default)]
    pub exponent: f64,
    /// Coupling prefactor. Either this or `gamma` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    /// Target rotating-wave rate at `omega0`; calibrates `g0 = √(γ·δω/π)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub diamagnetic: DiamagneticPolicy,
    #[serde(default)]
    pub center_band: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativeConfig {
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridConfig {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    #[serde(default = "default_window")]
    pub window_fraction: f64,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    #[serde(default)]
    pub method: RateMethod,
    /// Coupling range of the exponential-law fit in `rates` mode.
    #[serde(default = "default_law_range")]
    pub law_range: [f64; 2],
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            window_fraction: DEFAULT_WINDOW_FRACTION,
            n_modes: DEFAULT_N_MODES,
            method: RateMethod::default(),
            law_range: default_law_range(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_spp")]
    pub samples_per_period: usize,
    /// End time in units of the revival time.
    #[serde(default = "one")]
    pub t_end_factor: f64,
    #[serde(default)]
    pub engine: Engine,
    /// Initial `(Re, Im)` of `a1` and `a2`; reservoirs start empty.
    #[serde(default = "default_a1")]
    pub a1: [f64; 2],
    #[serde(default)]
    pub a2: [f64; 2],
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            t_end_factor: 1.0,
            engine: Engine::default(),
            a1: default_a1(),
            a2: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// File stem; the mode name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), name: None, formats: default_formats() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_window() -> f64 {
    DEFAULT_WINDOW_FRACTION
}
fn default_modes() -> usize {
    DEFAULT_N_MODES
}
fn default_law_range() -> [f64; 2] {
    [0.5, 1.0]
}
fn default_spp() -> usize {
    DEFAULT_SAMPLES_PER_PERIOD
}
fn default_a1() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Gnuplot]
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn finite_nonneg(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(field(path, format!("must be finite and non-negative, got {v}")))
    }
}

impl ReservoirConfig {
    fn resolve(&self, path: &str) -> Result<ReservoirParams, CliError> {
        if self.n == 0 {
            return Err(field(&format!("{path}.n"), "must be at least 1"));
        }
        if !(self.delta_omega.is_finite() && self.delta_omega > 0.0) {
            return Err(field(&format!("{path}.delta_omega"), format!("must be positive, got {}", self.delta_omega)));
        }
        if !self.exponent.is_finite() {
            return Err(field(&format!("{path}.exponent"), "must be finite"));
        }
        let law = match (self.g0, self.gamma) {
            (None, None) => return Err(field(path, "set g0 or gamma")),
            (Some(g0), None) => {
                finite_nonneg(&format!("{path}.g0"), g0)?;
                DispersionLaw::power_law(g0, self.exponent)
            }
            (g0, Some(gamma)) => {
                finite_nonneg(&format!("{path}.gamma"), gamma)?;
                let law = DispersionLaw::calibrated(gamma, self.delta_omega, self.exponent);
                if let Some(g0) = g0 {
                    if (g0 - law.g0).abs() > 1e-12 * law.g0.max(1e-300) {
                        return Err(field(
                            &format!("{path}.g0"),
                            format!("{g0} disagrees with the calibration from gamma ({})", law.g0),
                        ));
                    }
                }
                law
            }
        };
        Ok(ReservoirParams::new(self.n, self.delta_omega, law)
            .map_err(|e| field(path, e))?
            .with_diamagnetic(self.diamagnetic)
            .with_centered_band(self.center_band))
    }

    fn materialize(&mut self) {
        if let Some(gamma) = self.gamma {
            self.g0 = Some(DispersionLaw::calibrated(gamma, self.delta_omega, self.exponent).g0);
        }
    }
}

/// Validated configuration with core parameter types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub omega0: f64,
    pub reservoirs: Option<(ReservoirParams, ReservoirParams)>,
    pub dissipative: Option<DissipativeParams>,
    pub grid: Vec<f64>,
}

impl Resolved {
    /// Pair parameters at the configured coupling.
    pub fn pair(&self) -> Result<PairParams, CliError> {
        let pc = &self.config.pair;
        let d = pc.coupling * pc.coupling / pc.omega0;
        PairParams::new(pc.omega0, pc.coupling, pc.d1.unwrap_or(d), pc.d2.unwrap_or(d)).map_err(|e| field("pair", e))
    }

    pub fn reservoirs(&self) -> (ReservoirParams, ReservoirParams) {
        self.reservoirs.expect("validated")
    }

    pub fn initial_amplitudes(&self) -> (C64, C64) {
        let s = &self.config.simulation;
        (C64::new(s.a1[0], s.a1[1]), C64::new(s.a2[0], s.a2[1]))
    }

    pub fn stem(&self) -> String {
        self.config.output.name.clone().unwrap_or_else(|| self.config.mode.name().to_string())
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Checks every field and fills in derived defaults.
    pub fn resolve(mut self) -> Result<Resolved, CliError> {
        let pc = &self.pair;
        if !(pc.omega0.is_finite() && pc.omega0 > 0.0) {
            return Err(field("pair.omega0", format!("must be positive, got {}", pc.omega0)));
        }
        finite_nonneg("pair.coupling", pc.coupling)?;
        let omega0 = pc.omega0;
        let sweep = matches!(self.mode, Mode::Eigs | Mode::Rates);
        if sweep && (pc.d1.is_some() || pc.d2.is_some()) {
            return Err(field("pair.d1", "sweeps fix D1 = D2 = Ω²/ω0; remove d1/d2"));
        }

        let reservoirs = match &self.reservoirs {
            Some([a, b]) => Some((a.resolve("reservoirs[0]")?, b.resolve("reservoirs[1]")?)),
            None if self.mode == Mode::Eigs => None,
            None => return Err(field("reservoirs", format!("required for mode {}", self.mode.name()))),
        };

        if self.dissipative.is_none() && self.mode == Mode::Compare {
            // damp the reference model at the reservoirs' own rates
            if let Some((r1, r2)) = &reservoirs {
                let rate = |r: &ReservoirParams| {
                    usc_relax_core::analytic::gamma_rwa(r.dispersion(), r.delta_omega(), omega0, omega0).unwrap_or(0.0)
                };
                self.dissipative = Some(DissipativeConfig { gamma1: rate(r1), gamma2: rate(r2) });
            }
        }
        let dissipative = match self.dissipative {
            Some(d) => {
                finite_nonneg("dissipative.gamma1", d.gamma1)?;
                finite_nonneg("dissipative.gamma2", d.gamma2)?;
                Some(DissipativeParams::new(d.gamma1, d.gamma2).map_err(|e| field("dissipative", e))?)
            }
            None if self.mode == Mode::Eigs => return Err(field("dissipative", "required for mode eigs")),
            None => None,
        };

        let grid = match (&self.omega_grid, sweep) {
            (Some(g), _) => {
                if g.count == 0 {
                    return Err(field("omega_grid.count", "must be at least 1"));
                }
                finite_nonneg("omega_grid.start", g.start)?;
                if !g.stop.is_finite() {
                    return Err(field("omega_grid.stop", "must be finite"));
                }
                if g.count > 1 && !(g.stop > g.start) {
                    return Err(field("omega_grid.stop", format!("must exceed start ({}) when count > 1", g.start)));
                }
                g.points()
            }
            (None, true) => return Err(field("omega_grid", format!("required for mode {}", self.mode.name()))),
            (None, false) => vec![self.pair.coupling],
        };

        let e = &self.estimation;
        if !(e.window_fraction > 0.0 && e.window_fraction <= 1.0) {
            return Err(field("estimation.window_fraction", format!("must lie in (0, 1], got {}", e.window_fraction)));
        }
        if !(2..=6).contains(&e.n_modes) {
            return Err(field("estimation.n_modes", format!("must lie in 2..=6, got {}", e.n_modes)));
        }
        if !(e.law_range[0].is_finite() && e.law_range[1] > e.law_range[0]) {
            return Err(field("estimation.law_range", "must be an increasing pair"));
        }
        let s = &self.simulation;
        if !(s.t_end_factor.is_finite() && s.t_end_factor > 0.0) {
            return Err(field("simulation.t_end_factor", format!("must be positive, got {}", s.t_end_factor)));
        }
        if s.samples_per_period < 16 {
            return Err(field("simulation.samples_per_period", "must be at least 16"));
        }
        if s.a1.iter().chain(&s.a2).any(|v| !v.is_finite()) {
            return Err(field("simulation.a1", "initial amplitudes must be finite"));
        }
        if self.output.formats.is_empty() {
            return Err(field("output.formats", "list at least one format"));
        }
        if let Some(name) = &self.output.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(field("output.name", "must be a plain file stem"));
            }
        }

        if let Some(rs) = self.reservoirs.as_mut() {
            rs.iter_mut().for_each(ReservoirConfig::materialize);
        }
        if self.output.name.is_none() {
            self.output.name = Some(self.mode.name().to_string());
        }
        let resolved = Resolved { config: self, omega0, reservoirs, dissipative, grid };
        if !sweep {
            resolved.pair()?;
        }
        Ok(resolved)
    }
}
