//! Mode frequencies and relaxation rates from sampled amplitudes.
//!
//! Rates come from a two-stage procedure: a flat-top DFT over the pre-revival
//! window locates the spectral lines, then a Levenberg–Marquardt fit of damped
//! complex exponentials in the time domain refines them. The finite window
//! broadens DFT lines, so reading rates off peak widths is kept only as an
//! alternative ([`RateMethod::PeakWidth`]).

mod dft;
mod fit;

pub use dft::{Spectrum, Window};
pub use fit::{fit_damped_modes, linear_amplitudes, synthesize, DampedMode, FitResult, Samples};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::TimeSeries;
use crate::C64;

/// Samples required inside the analysis window.
pub const MIN_SAMPLES: usize = 256;
/// Fits with a relative residual above this are flagged.
pub const RESIDUAL_LIMIT: f64 = 0.05;
/// Fitted rates in `(−NEGATIVE_RATE_TOL, 0)` are treated as zero.
pub const NEGATIVE_RATE_TOL: f64 = 1e-9;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.9;
pub const DEFAULT_N_MODES: usize = 4;

const PAD_FACTOR: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("{found} samples in the analysis window, need at least {required}")]
    TooFewSamples { found: usize, required: usize },
    #[error("window fraction must lie in (0, 1], got {0}")]
    InvalidWindow(f64),
    #[error("mode count {0} is outside the supported range")]
    InvalidModeCount(usize),
    #[error("found {0} resolvable positive-frequency peaks, need two")]
    TooFewPeaks(usize),
    #[error("fitted rate {gamma} of mode {index} is negative")]
    NegativeRate { index: usize, gamma: f64 },
    #[error("exponential law needs at least 4 rows, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has nonpositive rate {gamma}")]
    NonpositiveRate { row: usize, gamma: f64 },
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    /// DFT-seeded time-domain least squares.
    #[default]
    LeastSquares,
    /// Half width at half maximum of the rectangular-window power spectrum.
    PeakWidth,
}

/// Frequencies and rates of the symmetric (higher) and antisymmetric (lower) modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub omega_s: f64,
    pub omega_a: f64,
    pub gamma_s: f64,
    pub gamma_a: f64,
    /// `‖fit − signal‖ / ‖signal‖`.
    pub residual: f64,
    /// Set when `residual` exceeds [`RESIDUAL_LIMIT`].
    pub flagged: bool,
    /// Unpadded DFT bin width of the analysis window.
    pub bin_width: f64,
    pub method: RateMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationOptions {
    pub window_fraction: f64,
    pub n_modes: usize,
    pub method: RateMethod,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self { window_fraction: DEFAULT_WINDOW_FRACTION, n_modes: DEFAULT_N_MODES, method: RateMethod::LeastSquares }
    }
}

fn clamp_rate(index: usize, gamma: f64) -> Result<f64, EstimationError> {
    if !gamma.is_finite() {
        return Err(EstimationError::NonFinite);
    }
    if gamma >= 0.0 {
        Ok(gamma)
    } else if gamma > -NEGATIVE_RATE_TOL {
        Ok(0.0)
    } else {
        Err(EstimationError::NegativeRate { index, gamma })
    }
}

/// Initial rate guess from the rectangular-window line width.
fn seed_rate(rect: &Spectrum, nu: f64) -> f64 {
    let i = rect.local_peak_near(nu, 2.0 * rect.bin_width).unwrap_or_else(|| rect.index_of(nu));
    // the window alone contributes roughly 0.44 bins of half width
    let w = rect.hwhm(i).map(|w| w - 0.44 * rect.bin_width).unwrap_or(0.0);
    w.clamp(1e-4, 0.5)
}

/// Lines weaker than this fraction of the strongest one are ignored.
const PEAK_FLOOR: f64 = 1e-3;

/// Peaks of `spec` separated by more than `min_sep`, strongest first.
fn distinct_peaks(spec: &Spectrum, min_sep: f64, accept: impl Fn(f64) -> bool) -> Vec<f64> {
    let mag = spec.magnitude();
    let floor = PEAK_FLOOR * mag.iter().copied().fold(0.0, f64::max);
    let mut out: Vec<f64> = Vec::new();
    for i in spec.peaks() {
        if mag[i] <= floor {
            break;
        }
        let f = spec.refine_peak(i);
        if accept(f) && out.iter().all(|g| (g - f).abs() > min_sep) {
            out.push(f);
        }
    }
    out
}

/// Fits `n_modes` damped exponentials to `y`, seeding from the strongest
/// spectral lines. Suitable for synthetic signals and other generic input.
pub fn fit_signal(y: &[C64], dt: f64, n_modes: usize) -> Result<FitResult, EstimationError> {
    if n_modes == 0 || n_modes > 6 {
        return Err(EstimationError::InvalidModeCount(n_modes));
    }
    if y.len() < MIN_SAMPLES {
        return Err(EstimationError::TooFewSamples { found: y.len(), required: MIN_SAMPLES });
    }
    if !(dt > 0.0) || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EstimationError::NonFinite);
    }
    // Greedy: add the strongest line of the current residual, then refit all
    // modes jointly. Blended lines surface once their neighbours are removed.
    let samples = Samples { y, dt };
    let mut fit: Option<FitResult> = None;
    for _ in 0..n_modes {
        let current: Vec<DampedMode> = fit.as_ref().map(|f| f.modes.clone()).unwrap_or_default();
        let model = synthesize(&current, y.len(), dt);
        let resid: Vec<C64> = y.iter().zip(&model).map(|(a, b)| a - b).collect();
        let flat = Spectrum::compute(&resid, dt, Window::FlatTop, PAD_FACTOR);
        let bin = flat.bin_width;
        let Some(&nu) = distinct_peaks(&flat, bin, |f| current.iter().all(|m| (m.nu - f).abs() > 0.5 * bin)).first()
        else {
            break;
        };
        let rect = Spectrum::compute(&resid, dt, Window::Rectangular, PAD_FACTOR);
        let mut seeds: Vec<(f64, f64)> = current.iter().map(|m| (m.gamma, m.nu)).collect();
        seeds.push((seed_rate(&rect, nu), nu));
        fit = Some(fit_damped_modes(&samples, &seeds));
    }
    let mut fit = fit.unwrap_or_else(|| fit_damped_modes(&samples, &[(1e-4, 0.0)]));
    for (k, m) in fit.modes.iter_mut().enumerate() {
        m.gamma = clamp_rate(k, m.gamma)?;
    }
    Ok(fit)
}

/// Extracts the two normal-mode frequencies and rates from `series.a1`.
///
/// The analysis window is `[0, window_fraction·T_R]`, with `T_R` taken from
/// the series metadata (or the series length when absent). Frequencies are
/// reported as positive numbers: the rotation sense of the dominant spectral
/// weight is detected and the signal conjugated if needed.
pub fn estimate_modes(series: &TimeSeries, opts: &EstimationOptions) -> Result<RatePair, EstimationError> {
    let EstimationOptions { window_fraction, n_modes, method } = *opts;
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(EstimationError::InvalidWindow(window_fraction));
    }
    if !(2..=6).contains(&n_modes) {
        return Err(EstimationError::InvalidModeCount(n_modes));
    }
    let horizon = series.meta.revival_time.or(series.times.last().copied()).unwrap_or(0.0);
    let window = series.truncated(window_fraction * horizon);
    let n = window.times.len();
    if n < MIN_SAMPLES {
        return Err(EstimationError::TooFewSamples { found: n, required: MIN_SAMPLES });
    }
    let dt = window.dt();
    let mut y = window.a1;
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EstimationError::NonFinite);
    }

    let mut flat = Spectrum::compute(&y, dt, Window::FlatTop, PAD_FACTOR);
    let weight = |s: &Spectrum, positive: bool| -> f64 {
        s.freqs.iter().zip(&s.values).filter(|(f, _)| (**f > 0.0) == positive).map(|(_, v)| v.norm_sqr()).sum()
    };
    if weight(&flat, false) > weight(&flat, true) {
        y.iter_mut().for_each(|z| *z = z.conj());
        flat = Spectrum::compute(&y, dt, Window::FlatTop, PAD_FACTOR);
    }
    let rect = Spectrum::compute(&y, dt, Window::Rectangular, PAD_FACTOR);
    let bin = flat.bin_width;

    let mut pos = distinct_peaks(&flat, 3.0 * bin, |f| f > 0.0);
    if pos.len() < 2 {
        return Err(EstimationError::TooFewPeaks(pos.len()));
    }
    pos.truncate(2);
    pos.sort_by(|a, b| b.total_cmp(a));

    if method == RateMethod::PeakWidth {
        let width = |nu: f64| -> Result<f64, EstimationError> {
            let i = rect.local_peak_near(nu, 2.0 * bin).unwrap_or_else(|| rect.index_of(nu));
            rect.hwhm(i).ok_or(EstimationError::TooFewPeaks(1))
        };
        return Ok(RatePair {
            omega_s: pos[0],
            omega_a: pos[1],
            gamma_s: width(pos[0])?,
            gamma_a: width(pos[1])?,
            residual: f64::NAN,
            flagged: false,
            bin_width: bin,
            method,
        });
    }

    // the positive pair first, then their counter-rotating mirrors, then any
    // remaining strong lines
    let mut nus = pos.clone();
    for &nu in &pos {
        if nus.len() >= n_modes {
            break;
        }
        let mirror = flat.local_peak_near(-nu, 3.0 * bin).map(|i| flat.refine_peak(i)).unwrap_or(-nu);
        nus.push(mirror);
    }
    if nus.len() < n_modes {
        let extra = distinct_peaks(&flat, 3.0 * bin, |f| nus.iter().all(|g| (g - f).abs() > 3.0 * bin));
        nus.extend(extra.into_iter().take(n_modes - nus.len()));
    }
    let seeds: Vec<(f64, f64)> = nus.iter().map(|&nu| (seed_rate(&rect, nu), nu)).collect();
    let fit = fit_damped_modes(&Samples { y: &y, dt }, &seeds);

    // the two fitted modes that started from the positive pair
    let (s, a) = (fit.modes[0], fit.modes[1]);
    let (s, a) = if s.nu >= a.nu { (s, a) } else { (a, s) };
    if !(a.nu > 0.0) {
        return Err(EstimationError::TooFewPeaks(usize::from(s.nu > 0.0)));
    }
    Ok(RatePair {
        omega_s: s.nu,
        omega_a: a.nu,
        gamma_s: clamp_rate(0, s.gamma)?,
        gamma_a: clamp_rate(1, a.gamma)?,
        residual: fit.residual,
        flagged: !(fit.residual <= RESIDUAL_LIMIT),
        bin_width: bin,
        method,
    })
}

/// `γ(Ω) = gamma0·e^{−decay_const·Ω}` fitted by linear regression of `ln γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpLawFit {
    pub gamma0: f64,
    pub decay_const: f64,
    pub r_squared: f64,
}

pub fn fit_exponential_law(rows: &[(f64, f64)]) -> Result<ExpLawFit, EstimationError> {
    if rows.len() < 4 {
        return Err(EstimationError::TooFewRows(rows.len()));
    }
    for (row, &(omega, gamma)) in rows.iter().enumerate() {
        if !omega.is_finite() || !gamma.is_finite() {
            return Err(EstimationError::NonFinite);
        }
        if gamma <= 0.0 {
            return Err(EstimationError::NonpositiveRate { row, gamma });
        }
    }
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1.ln()).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1.ln() - my)).sum();
    let syy: f64 = rows.iter().map(|r| (r.1.ln() - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EstimationError::NonFinite);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = rows.iter().map(|r| (r.1.ln() - intercept - slope * r.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ExpLawFit { gamma0: intercept.exp(), decay_const: -slope, r_squared })
}
