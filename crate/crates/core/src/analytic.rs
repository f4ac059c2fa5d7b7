//! Closed-form relaxation rates of the effective two-mode model.
//!
//! After adiabatic elimination of the reservoirs the symmetric and
//! antisymmetric modes `ω_{s,a} = √(ω0² ± 2Ωω0 + 4Ω²)` obey a damped 2×2
//! system whose coefficients are built from the rotating-wave rates
//! `γ_{1,2}(ω) = π g²(ω) ρ(ω)/δω` evaluated at the mode frequencies.
//! The derivation assumes `D1 = D2 = Ω²/ω0` and no reservoir diamagnetic terms.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::Serialize;
use thiserror::Error;

use crate::model::{DispersionLaw, PairParams, ReservoirParams};
use crate::{C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("rotating-wave rate needs a positive frequency, got {0}")]
    NonpositiveFrequency(f64),
    #[error("rotating-wave rate needs a positive reservoir spacing, got {0}")]
    InvalidSpacing(f64),
}

/// `(ω_s, ω_a)`.
pub fn mode_frequencies(omega0: f64, coupling: f64) -> (f64, f64) {
    let base = omega0 * omega0 + 4.0 * coupling * coupling;
    let cross = 2.0 * coupling * omega0;
    ((base + cross).sqrt(), (base - cross).sqrt())
}

/// `γ(ω) = π g(ω)² ρ(ω) / δω`.
pub fn gamma_rwa(disp: &DispersionLaw, delta_omega: f64, omega: f64, omega0: f64) -> Result<f64, AnalyticError> {
    if !(omega > 0.0) {
        return Err(AnalyticError::NonpositiveFrequency(omega));
    }
    if !(delta_omega > 0.0) {
        return Err(AnalyticError::InvalidSpacing(delta_omega));
    }
    let g = disp.coupling(omega, omega0);
    Ok(PI * g * g * disp.density(omega, omega0) / delta_omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// `Γ^(±)(ω) = 4 ω0 ω (γ1(ω) ± γ2(ω))`.
pub fn big_gamma(omega0: f64, omega_mode: f64, gamma1: f64, gamma2: f64, sign: Sign) -> f64 {
    let g = match sign {
        Sign::Plus => gamma1 + gamma2,
        Sign::Minus => gamma1 - gamma2,
    };
    4.0 * omega0 * omega_mode * g
}

/// Coefficients of the effective damped two-mode system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticCoefficients {
    pub omega0: f64,
    pub omega_s: f64,
    pub omega_a: f64,
    pub gamma_s_plus: f64,
    pub gamma_a_plus: f64,
    pub gamma_s_minus: f64,
    pub gamma_a_minus: f64,
    /// `Γ_s⁺/(8ω_s²)`
    pub beta_1_1: f64,
    /// `Γ_a⁺/(8ω_a²)`
    pub beta_2_2: f64,
    /// `Γ_a⁻/(8ω_sω_a)`
    pub beta_2_1: f64,
    /// `Γ_s⁻/(8ω_sω_a)`
    pub beta_1_2: f64,
}

impl AnalyticCoefficients {
    /// Coefficients at given mode frequencies with rate laws `γ1(ω)`, `γ2(ω)`.
    pub fn at_frequencies(
        omega0: f64,
        omega_s: f64,
        omega_a: f64,
        gamma1: impl Fn(f64) -> f64,
        gamma2: impl Fn(f64) -> f64,
    ) -> Self {
        let (g1s, g2s) = (gamma1(omega_s), gamma2(omega_s));
        let (g1a, g2a) = (gamma1(omega_a), gamma2(omega_a));
        let gamma_s_plus = big_gamma(omega0, omega_s, g1s, g2s, Sign::Plus);
        let gamma_s_minus = big_gamma(omega0, omega_s, g1s, g2s, Sign::Minus);
        let gamma_a_plus = big_gamma(omega0, omega_a, g1a, g2a, Sign::Plus);
        let gamma_a_minus = big_gamma(omega0, omega_a, g1a, g2a, Sign::Minus);
        Self {
            omega0,
            omega_s,
            omega_a,
            gamma_s_plus,
            gamma_a_plus,
            gamma_s_minus,
            gamma_a_minus,
            beta_1_1: gamma_s_plus / (8.0 * omega_s * omega_s),
            beta_2_2: gamma_a_plus / (8.0 * omega_a * omega_a),
            beta_2_1: gamma_a_minus / (8.0 * omega_s * omega_a),
            beta_1_2: gamma_s_minus / (8.0 * omega_s * omega_a),
        }
    }

    /// Coefficients for a pair coupled to two reservoirs.
    pub fn new(p: &PairParams, r1: &ReservoirParams, r2: &ReservoirParams) -> Result<Self, AnalyticError> {
        let w0 = p.omega0();
        let (ws, wa) = mode_frequencies(w0, p.coupling());
        for r in [r1, r2] {
            if !(r.delta_omega() > 0.0) {
                return Err(AnalyticError::InvalidSpacing(r.delta_omega()));
            }
        }
        // mode frequencies are positive for every Ω, so the rates cannot fail
        let rate = |r: &ReservoirParams, w: f64| gamma_rwa(r.dispersion(), r.delta_omega(), w, w0).unwrap_or(0.0);
        Ok(Self::at_frequencies(w0, ws, wa, |w| rate(r1, w), |w| rate(r2, w)))
    }
}

/// Eigenvalues of the effective model with rates `γ = −Re λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticResult {
    pub omega_s: f64,
    pub omega_a: f64,
    pub lambda_s: C64,
    pub lambda_a: C64,
    pub gamma_s: f64,
    pub gamma_a: f64,
    /// True when labelling by rotation direction disagrees with the printed
    /// `∓` order of the closed form.
    pub branch_swapped: bool,
}

/// The two roots `−(ω_s²Γ_a⁺ + ω_a²Γ_s⁺ ∓ √R)/(16ω_s²ω_a²)` in `(−, +)` order.
///
/// `flip` selects `R = 4ω_s²ω_a²Γ_s⁻Γ_a⁻ − X²` (consistent with the 2×2
/// system); otherwise `R = 4ω_s²ω_a²Γ_s⁻Γ_a⁻ + X²`, where
/// `X = ω_s²(8ω_a²(ω_s − ω_a) + iΓ_a⁺) − iω_a²Γ_s⁺`.
fn closed_form_roots(c: &AnalyticCoefficients, flip: bool) -> (C64, C64) {
    let (ws2, wa2) = (c.omega_s * c.omega_s, c.omega_a * c.omega_a);
    let x = ws2 * (8.0 * wa2 * (c.omega_s - c.omega_a) + I * c.gamma_a_plus) - I * wa2 * c.gamma_s_plus;
    let cross = C64::new(4.0 * ws2 * wa2 * c.gamma_s_minus * c.gamma_a_minus, 0.0);
    let radicand = if flip { cross - x * x } else { cross + x * x };
    let root = radicand.sqrt();
    let a = C64::new(ws2 * c.gamma_a_plus + wa2 * c.gamma_s_plus, 0.0);
    let den = 16.0 * ws2 * wa2;
    (-(a - root) / den, -(a + root) / den)
}

/// Relative tolerance below which the two roots count as co-rotating.
const IM_TIE: f64 = 1e-12;

fn label(c: &AnalyticCoefficients, roots: (C64, C64)) -> AnalyticResult {
    let (minus, plus) = roots;
    let scale = minus.norm().max(plus.norm()).max(f64::MIN_POSITIVE);
    // the symmetric mode rotates faster, so it carries the more negative Im λ
    let swapped = plus.im < minus.im - IM_TIE * scale;
    let (s, a) = if swapped { (plus, minus) } else { (minus, plus) };
    AnalyticResult {
        omega_s: c.omega_s,
        omega_a: c.omega_a,
        lambda_s: s,
        lambda_a: a,
        gamma_s: -s.re,
        gamma_a: -a.re,
        branch_swapped: swapped,
    }
}

/// Closed-form eigenvalues from precomputed coefficients.
pub fn lambda_from_coefficients(c: &AnalyticCoefficients) -> AnalyticResult {
    label(c, closed_form_roots(c, true))
}

/// Closed-form relaxation rates of the pair.
///
/// Only `omega0` and the coupling of `p` are used; the derivation fixes
/// `D1 = D2 = Ω²/ω0` and drops the reservoir diamagnetic terms.
pub fn analytic_lambda(
    p: &PairParams,
    r1: &ReservoirParams,
    r2: &ReservoirParams,
) -> Result<AnalyticResult, AnalyticError> {
    Ok(lambda_from_coefficients(&AnalyticCoefficients::new(p, r1, r2)?))
}

/// The closed form with the opposite sign in front of `X²`. Its real parts
/// approach `±(ω_s − ω_a)/2`, i.e. one branch grows; kept only so the
/// discrepancy can be reported.
pub fn analytic_lambda_as_printed(
    p: &PairParams,
    r1: &ReservoirParams,
    r2: &ReservoirParams,
) -> Result<AnalyticResult, AnalyticError> {
    let c = AnalyticCoefficients::new(p, r1, r2)?;
    let (minus, plus) = closed_form_roots(&c, false);
    Ok(AnalyticResult {
        omega_s: c.omega_s,
        omega_a: c.omega_a,
        lambda_s: minus,
        lambda_a: plus,
        gamma_s: -minus.re,
        gamma_a: -plus.re,
        branch_swapped: false,
    })
}

/// Effective 2×2 system in the frame rotating at `(ω_s + ω_a)/2`:
///
/// ```text
/// ȧ1 = −(P+Q) a1 − (R−S+iΔ/2) a2
/// ȧ2 = −(R+S+iΔ/2) a1 − (P−Q) a2
/// ```
///
/// with `P = (β11+β22)/2`, `Q = (β21+β12)/2`, `R = (β11−β22)/2`,
/// `S = (β21−β12)/2` and `Δ = ω_s − ω_a`.
pub fn effective_2x2(c: &AnalyticCoefficients) -> Matrix2<C64> {
    let p = 0.5 * (c.beta_1_1 + c.beta_2_2);
    let q = 0.5 * (c.beta_2_1 + c.beta_1_2);
    let r = 0.5 * (c.beta_1_1 - c.beta_2_2);
    let s = 0.5 * (c.beta_2_1 - c.beta_1_2);
    let half_delta = 0.5 * (c.omega_s - c.omega_a);
    Matrix2::new(
        C64::new(-(p + q), 0.0),
        -(C64::new(r - s, half_delta)),
        -(C64::new(r + s, half_delta)),
        C64::new(-(p - q), 0.0),
    )
}

/// Eigenvalues of a 2×2 complex matrix, in `(−√, +√)` order.
pub fn eigenvalues_2x2(m: &Matrix2<C64>) -> (C64, C64) {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr * 0.25 - det).sqrt();
    (tr * 0.5 - disc, tr * 0.5 + disc)
}

/// Log-log slopes `(k_s, k_a)` of the closed-form rates when both mode
/// frequencies are multiplied by each of `scales` at fixed coupling.
pub fn rate_scaling_exponents(p: &PairParams, r1: &ReservoirParams, r2: &ReservoirParams, scales: &[f64]) -> (f64, f64) {
    let w0 = p.omega0();
    let (ws, wa) = mode_frequencies(w0, p.coupling());
    let rate = |r: &ReservoirParams, w: f64| gamma_rwa(r.dispersion(), r.delta_omega(), w, w0).unwrap_or(0.0);
    let mut pts_s = Vec::with_capacity(scales.len());
    let mut pts_a = Vec::with_capacity(scales.len());
    for &f in scales {
        let c = AnalyticCoefficients::at_frequencies(w0, f * ws, f * wa, |w| rate(r1, w), |w| rate(r2, w));
        let res = lambda_from_coefficients(&c);
        pts_s.push((f.ln(), res.gamma_s.ln()));
        pts_a.push((f.ln(), res.gamma_a.ln()));
    }
    (slope(&pts_s), slope(&pts_a))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
