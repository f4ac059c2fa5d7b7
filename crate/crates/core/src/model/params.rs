//! Parameter types for the oscillator pair, its reservoirs and the
//! phenomenological damping model.
//!
//! All frequencies are expressed in units of the bare oscillator frequency
//! `omega0` (which is usually 1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Relative slack applied when checking `D >= Omega^2 / (2 omega0)` so that
/// values computed from the bound itself are not rejected by rounding.
const BOUND_SLACK: f64 = 1e-12;

/// Parameters of the two coupled oscillators.
///
/// `H_S = ω0 a1†a1 + ω0 a2†a2 + Ω (a1 + a1†)(a2 + a2†) + D1 (a1 + a1†)² + D2 (a2 + a2†)²`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairParams {
    omega0: f64,
    coupling: f64,
    d1: f64,
    d2: f64,
}

impl PairParams {
    pub fn new(omega0: f64, coupling: f64, d1: f64, d2: f64) -> Result<Self, ModelError> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(ModelError::InvalidOmega0(omega0));
        }
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(ModelError::InvalidCoupling(coupling));
        }
        let bound = coupling * coupling / (2.0 * omega0);
        for (index, value) in [(1u8, d1), (2u8, d2)] {
            if !value.is_finite() || value < bound - BOUND_SLACK * bound.max(1.0) {
                return Err(ModelError::DiamagneticBound { index, value, bound });
            }
        }
        Ok(Self { omega0, coupling, d1, d2 })
    }

    /// The choice used by the analytic model: `D1 = D2 = Ω²/ω0`.
    pub fn with_default_diamagnetic(omega0: f64, coupling: f64) -> Result<Self, ModelError> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(ModelError::InvalidOmega0(omega0));
        }
        let d = coupling * coupling / omega0;
        Self::new(omega0, coupling, d, d)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Coupling strength Ω between the two oscillators.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Smallest admissible diamagnetic coefficient, `Ω²/(2ω0)`.
    pub fn stability_bound(&self) -> f64 {
        self.coupling * self.coupling / (2.0 * self.omega0)
    }

    /// Same oscillators at a different coupling, with `D1 = D2 = Ω²/ω0`.
    pub fn at_coupling(&self, coupling: f64) -> Result<Self, ModelError> {
        Self::with_default_diamagnetic(self.omega0, coupling)
    }
}

/// Density-of-states weight ρ(ω) of a reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityOfStates {
    Constant(f64),
    /// `scale * (ω/ω0)^exponent`
    PowerLaw { scale: f64, exponent: f64 },
}

impl DensityOfStates {
    pub fn eval(&self, omega: f64, omega0: f64) -> f64 {
        match *self {
            DensityOfStates::Constant(value) => value,
            DensityOfStates::PowerLaw { scale, exponent } => scale * (omega / omega0).abs().powf(exponent),
        }
    }
}

impl Default for DensityOfStates {
    fn default() -> Self {
        DensityOfStates::Constant(1.0)
    }
}

/// Frequency dependence of the system–reservoir coupling,
/// `g(ω) = g0 · |ω/ω0|^s`.
///
/// The absolute value keeps the law defined for the nonpositive reservoir
/// frequencies produced by the `k − N/2` indexing; only `g²` enters any rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionLaw {
    pub g0: f64,
    pub exponent: f64,
    pub rho: DensityOfStates,
}

impl DispersionLaw {
    pub const FLAT: f64 = 0.0;
    pub const LINEAR: f64 = 1.0;
    pub const FIVE_QUARTERS: f64 = 1.25;

    pub fn flat(g0: f64) -> Self {
        Self::power_law(g0, Self::FLAT)
    }

    pub fn power_law(g0: f64, exponent: f64) -> Self {
        Self { g0, exponent, rho: DensityOfStates::default() }
    }

    /// Chooses `g0` so that the rotating-wave rate at `omega0` equals
    /// `gamma`: `g0 = sqrt(γ δω / (π ρ(ω0)))`.
    pub fn calibrated(gamma: f64, delta_omega: f64, exponent: f64) -> Self {
        let rho = DensityOfStates::default();
        let g0 = (gamma * delta_omega / (PI * rho.eval(1.0, 1.0))).sqrt();
        Self { g0, exponent, rho }
    }

    /// `g(ω)`
    pub fn coupling(&self, omega: f64, omega0: f64) -> f64 {
        if self.exponent == 0.0 {
            self.g0
        } else {
            self.g0 * (omega / omega0).abs().powf(self.exponent)
        }
    }

    pub fn density(&self, omega: f64, omega0: f64) -> f64 {
        self.rho.eval(omega, omega0)
    }

    /// Coupling of a single discrete reservoir mode, `g(ω_k)·sqrt(ρ(ω_k))`,
    /// so that the golden-rule rate of the discrete reservoir is
    /// `π g² ρ / δω`.
    pub fn mode_coupling(&self, omega: f64, omega0: f64) -> f64 {
        self.coupling(omega, omega0) * self.density(omega, omega0).max(0.0).sqrt()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let rho_ok = match self.rho {
            DensityOfStates::Constant(v) => v.is_finite() && v >= 0.0,
            DensityOfStates::PowerLaw { scale, exponent } => {
                scale.is_finite() && scale >= 0.0 && exponent.is_finite()
            }
        };
        if !(self.g0.is_finite() && self.g0 >= 0.0 && self.exponent.is_finite() && rho_ok) {
            return Err(ModelError::InvalidReservoir(format!(
                "dispersion law must have finite g0 >= 0, finite exponent and rho >= 0 (got g0 = {}, s = {})",
                self.g0, self.exponent
            )));
        }
        Ok(())
    }
}

/// How the reservoir diamagnetic terms `D_b (b + b†)²` are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiamagneticPolicy {
    /// `D_b = g²/(2ω0)`, evaluated per mode with the mode coupling.
    #[default]
    Full,
    Zero,
}

/// A reservoir of `n` equally spaced oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReservoirParams {
    n: usize,
    delta_omega: f64,
    dispersion: DispersionLaw,
    diamagnetic: DiamagneticPolicy,
    center_band: bool,
}

impl ReservoirParams {
    pub fn new(n: usize, delta_omega: f64, dispersion: DispersionLaw) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidReservoir("reservoir must contain at least one oscillator".into()));
        }
        if !(delta_omega.is_finite() && delta_omega >= 0.0) {
            return Err(ModelError::InvalidReservoir(format!(
                "frequency spacing must be finite and non-negative, got {delta_omega}"
            )));
        }
        dispersion.validate()?;
        Ok(Self { n, delta_omega, dispersion, diamagnetic: DiamagneticPolicy::Full, center_band: false })
    }

    pub fn with_diamagnetic(mut self, policy: DiamagneticPolicy) -> Self {
        self.diamagnetic = policy;
        self
    }

    /// Index the band with `k − (N+1)/2` instead of `k − N/2`, which centres
    /// it exactly on `omega0`.
    pub fn with_centered_band(mut self, center: bool) -> Self {
        self.center_band = center;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn dispersion(&self) -> &DispersionLaw {
        &self.dispersion
    }

    pub fn diamagnetic(&self) -> DiamagneticPolicy {
        self.diamagnetic
    }

    pub fn center_band(&self) -> bool {
        self.center_band
    }

    /// Mode frequencies `ω_k = ω0 + δω (k − N/2)`, `k = 1..N`, ascending.
    pub fn frequencies(&self, omega0: f64) -> Vec<f64> {
        let offset = if self.center_band { (self.n as f64 + 1.0) / 2.0 } else { self.n as f64 / 2.0 };
        (1..=self.n).map(|k| omega0 + self.delta_omega * (k as f64 - offset)).collect()
    }

    /// Per-mode coupling constants `g_k`.
    pub fn couplings(&self, omega0: f64) -> Vec<f64> {
        self.frequencies(omega0)
            .into_iter()
            .map(|w| self.dispersion.mode_coupling(w, omega0))
            .collect()
    }

    /// Per-mode diamagnetic coefficients `D_b`.
    pub fn diamagnetic_coefficients(&self, omega0: f64) -> Vec<f64> {
        match self.diamagnetic {
            DiamagneticPolicy::Full => self
                .couplings(omega0)
                .into_iter()
                .map(|g| g * g / (2.0 * omega0))
                .collect(),
            DiamagneticPolicy::Zero => vec![0.0; self.n],
        }
    }

    /// Number of modes with `ω_k <= 0`.
    pub fn nonpositive_modes(&self, omega0: f64) -> usize {
        self.frequencies(omega0).iter().filter(|&&w| w <= 0.0).count()
    }

    /// First revival time `T_R = 2π/δω`.
    pub fn revival_time(&self) -> Result<f64, ModelError> {
        revival_time(self.delta_omega)
    }

    /// The same reservoir with the coupling law replaced.
    pub fn with_dispersion(mut self, dispersion: DispersionLaw) -> Result<Self, ModelError> {
        dispersion.validate()?;
        self.dispersion = dispersion;
        Ok(self)
    }
}

/// `ω_k` for a reservoir; see [`ReservoirParams::frequencies`].
pub fn reservoir_frequencies(res: &ReservoirParams, omega0: f64) -> Vec<f64> {
    res.frequencies(omega0)
}

/// `T_R = 2π/δω`.
pub fn revival_time(delta_omega: f64) -> Result<f64, ModelError> {
    if !(delta_omega.is_finite() && delta_omega > 0.0) {
        return Err(ModelError::InvalidReservoir(format!(
            "revival time needs a positive frequency spacing, got {delta_omega}"
        )));
    }
    Ok(2.0 * PI / delta_omega)
}

/// Phenomenological relaxation rates of the two oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipativeParams {
    gamma1: f64,
    gamma2: f64,
}

impl DissipativeParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self, ModelError> {
        for g in [gamma1, gamma2] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(ModelError::InvalidDissipation { gamma1, gamma2 });
            }
        }
        Ok(Self { gamma1, gamma2 })
    }

    pub fn lossless() -> Self {
        Self { gamma1: 0.0, gamma2: 0.0 }
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, dw: f64) -> ReservoirParams {
        ReservoirParams::new(n, dw, DispersionLaw::flat(0.01)).unwrap()
    }

    #[test]
    fn two_mode_band() {
        let w = flat(2, 0.01).frequencies(1.0);
        assert_eq!(w.len(), 2);
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 1.01).abs() < 1e-15);
    }

    #[test]
    fn zero_spacing_collapses_band() {
        let w = flat(7, 0.0).frequencies(1.0);
        assert!(w.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn figure_two_band_edges() {
        let r = flat(300, 0.01);
        let w = r.frequencies(1.0);
        assert!((w[0] + 0.49).abs() < 1e-12);
        assert!((w[299] - 2.5).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        // k = 1..=50 give ω_k <= 0
        assert_eq!(r.nonpositive_modes(1.0), 50);
    }

    #[test]
    fn centered_band_is_symmetric() {
        let w = flat(4, 0.1).with_centered_band(true).frequencies(1.0);
        assert!((w[0] + w[3] - 2.0).abs() < 1e-14);
        assert!((w[1] + w[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn revival_times() {
        assert!((revival_time(0.01).unwrap() - 200.0 * PI).abs() < 1e-10);
        assert!((revival_time(0.1).unwrap() - 20.0 * PI).abs() < 1e-12);
        assert!((revival_time(2.0 * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(revival_time(0.0).is_err());
        assert!(revival_time(-0.1).is_err());
    }

    #[test]
    fn default_diamagnetic_satisfies_bound() {
        let p = PairParams::with_default_diamagnetic(1.0, 0.7).unwrap();
        assert!((p.d1() - 0.49).abs() < 1e-15);
        assert!(p.d1() >= p.stability_bound());
    }

    #[test]
    fn rejects_unbounded_hamiltonian() {
        let err = PairParams::new(1.0, 1.0, 0.4, 0.6).unwrap_err();
        assert!(matches!(err, ModelError::DiamagneticBound { index: 1, .. }));
        // exactly at the bound is admissible
        assert!(PairParams::new(1.0, 1.0, 0.5, 0.5).is_ok());
        assert!(PairParams::new(0.0, 0.1, 0.0, 0.0).is_err());
        assert!(PairParams::new(1.0, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn calibration_inverts_rwa_rate() {
        let d = DispersionLaw::calibrated(0.02, 0.01, 0.0);
        assert!((d.g0 - 0.007_978_845_608_028_654).abs() < 1e-15);
        assert!((PI * d.g0 * d.g0 / 0.01 - 0.02).abs() < 1e-15);
    }

    #[test]
    fn dispersion_fixes_g_at_omega0() {
        for s in [0.0, 1.0, 1.25, 0.5] {
            let d = DispersionLaw::power_law(0.3, s);
            assert_eq!(d.coupling(1.0, 1.0), 0.3);
        }
        let d = DispersionLaw::power_law(0.3, 1.0);
        assert!((d.coupling(2.0, 1.0) - 0.6).abs() < 1e-15);
        assert!((d.coupling(-0.5, 1.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn diamagnetic_policy() {
        let r = ReservoirParams::new(3, 0.1, DispersionLaw::flat(0.2)).unwrap();
        assert!(r.diamagnetic_coefficients(1.0).iter().all(|&d| (d - 0.02).abs() < 1e-15));
        let r = r.with_diamagnetic(DiamagneticPolicy::Zero);
        assert!(r.diamagnetic_coefficients(1.0).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn dissipative_rates_nonnegative() {
        assert!(DissipativeParams::new(0.1, -1e-3).is_err());
        assert!(DissipativeParams::new(0.1, 0.0).is_ok());
    }
}
