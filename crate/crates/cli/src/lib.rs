//! Configuration, sweep orchestration and file output for `usc-relax`.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Mode, Resolved, RunConfig};
pub use output::{write_outputs, Artifact, Cell, Table};
pub use run::{run_compare, run_eigs, run_rates, run_simulate, CompareResult, EigsResult, SimulateResult, SweepRow, SweepTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Runs the configured mode and writes its files; returns the paths written.
pub fn execute(resolved: &Resolved, jobs: usize) -> Result<Vec<std::path::PathBuf>, CliError> {
    let artifact = match resolved.config.mode {
        Mode::Eigs => run_eigs(resolved)?.artifact(resolved),
        Mode::Simulate => run_simulate(resolved)?.artifact(resolved),
        Mode::Rates => run_rates(resolved, jobs)?.artifact(resolved),
        Mode::Compare => run_compare(resolved)?.artifact(resolved),
    };
    write_outputs(&resolved.config.output.directory, &artifact, &resolved.config.output.formats)
}
