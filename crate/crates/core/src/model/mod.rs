//! Domain types and linear generators.

mod arrow;
mod coordinate;
mod energy;
mod generator;
mod params;
mod state;

pub use arrow::ArrowSystem;
pub use coordinate::{build_coordinate_generator, CoordinateSystem};
pub use energy::{classical_energy, EnergyForm};
pub use generator::{
    build_closed_generator, build_dissipative_generator, build_total_generator, printed_to_state_order,
    write_matrix_csv, LinearGenerator, SparseMatrix, PRINTED_ORDER,
};
pub use params::{
    reservoir_frequencies, revival_time, DensityOfStates, DiamagneticPolicy, DispersionLaw, DissipativeParams,
    PairParams, ReservoirParams,
};
pub use state::{CoordinateState, StateLayout, TotalState};
pub(crate) use generator::arrow_generator;
pub(crate) use state::conjugacy_deviation as state_conjugacy_deviation;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("omega0 must be finite and positive, got {0}")]
    InvalidOmega0(f64),
    #[error("coupling strength must be finite and non-negative, got {0}")]
    InvalidCoupling(f64),
    #[error("D{index} = {value} violates the stability bound D >= Omega^2/(2 omega0) = {bound}")]
    DiamagneticBound { index: u8, value: f64, bound: f64 },
    #[error("invalid reservoir: {0}")]
    InvalidReservoir(String),
    #[error("relaxation rates must be finite and non-negative, got ({gamma1}, {gamma2})")]
    InvalidDissipation { gamma1: f64, gamma2: f64 },
    #[error("state has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate form needs positive oscillator frequencies; oscillator {index} has {omega}")]
    NonpositiveFrequency { index: usize, omega: f64 },
    #[error("state is not conjugate-symmetric (deviation {0:e})")]
    NotConjugate(f64),
}
