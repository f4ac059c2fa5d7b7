//! Numerics for two ultra-strongly coupled oscillators relaxing into finite
//! bosonic reservoirs.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] parameter types, state layouts and the linear generators;
//! * [`spectrum`] eigenvalue sweeps of the damped 4×4 model and exceptional points;
//! * [`dynamics`] propagation of the full reservoir model and of the damped model;
//! * [`estimation`] rate extraction from time series and the exponential-law fit;
//! * [`analytic`] the closed-form rates of the effective two-mode model.
//!
//! Frequencies and rates are measured in units of the bare frequency `omega0`.

pub mod analytic;
pub mod dynamics;
pub mod estimation;
pub mod linalg;
pub mod model;
pub mod spectrum;

pub use num_complex::Complex64 as C64;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
