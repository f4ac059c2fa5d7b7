use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use usc_relax::{execute, CliError, Mode, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Eigs,
    Simulate,
    Rates,
    Compare,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Eigs => Mode::Eigs,
            Command::Simulate => Mode::Simulate,
            Command::Rates => Mode::Rates,
            Command::Compare => Mode::Compare,
        }
    }
}

/// Spectra, dynamics and relaxation rates of two ultra-strongly coupled
/// oscillators with finite reservoirs.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// What to run; overrides `mode` in the config.
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    emit_config: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    cfg.mode = args.command.into();
    if let Some(out) = args.out {
        cfg.output.directory = out;
    }
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs: must be at least 1".into()));
    }
    let resolved = cfg.resolve()?;
    if args.emit_config {
        println!("{}", serde_json::to_string_pretty(&resolved.config).expect("config serializes"));
        return Ok(());
    }
    for path in execute(&resolved, args.jobs)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("usc-relax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
