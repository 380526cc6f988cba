//! Command-line virtual experiments built on the `polsqueeze` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{FitKind, Output};
use crate::config::{AlignmentChoice, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "polsqueeze", version, about = "Virtual experiments with polarization-squeezed vacuum")]
pub struct Cli {
    /// key=value configuration file; missing keys take their defaults
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides measurement.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    Degenerate,
    Nondegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitArg {
    Gain,
    Nrf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S2 and S3 noise against quartz plate tilt
    SweepPhase,
    /// OPA output against pump power, with a gain-law fit
    SweepPower,
    /// Squeezed fraction of the two-crystal spectrum
    SpectralFraction {
        /// Defaults to crystal.alignment
        #[arg(long, value_enum)]
        alignment: Option<AlignmentArg>,
    },
    /// Raw pulse records of one configured run
    SimulateRun,
    /// Calibrated NRF estimate from a pulse-record file
    Estimate { records: PathBuf },
    /// Fits a gain curve or an NRF sweep read from CSV
    Fit {
        #[arg(value_enum)]
        kind: FitArg,
        input: PathBuf,
        /// Column names; default to the first two, unit weights
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        weight: Option<String>,
    },
    /// Prints the effective configuration
    ShowConfig,
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config {
                field: "--config".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs one command and returns its output without touching the disk.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::SweepPhase => commands::cmd_sweep_phase(&cfg),
        Command::SweepPower => commands::cmd_sweep_power(&cfg),
        Command::SpectralFraction { alignment } => {
            let a = match alignment {
                Some(AlignmentArg::Degenerate) => AlignmentChoice::Degenerate,
                Some(AlignmentArg::Nondegenerate) => AlignmentChoice::NonDegenerate,
                None => cfg.alignment,
            };
            commands::cmd_spectral_fraction(&cfg, a)
        }
        Command::SimulateRun => commands::cmd_simulate_run(&cfg),
        Command::Estimate { records } => commands::cmd_estimate(&cfg, records),
        Command::Fit { kind, input, x, y, weight } => {
            let data = fs::read(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
            let points = commands::read_fit_points(&data, x.as_deref(), y.as_deref(), weight.as_deref())?;
            let kind = match kind {
                FitArg::Gain => FitKind::Gain,
                FitArg::Nrf => FitKind::Nrf,
            };
            commands::cmd_fit(&cfg, kind, &points)
        }
        Command::ShowConfig => Ok(Output {
            report: cfg.to_text(),
            files: Vec::new(),
        }),
    }
}

/// Full invocation: thread pool, command, files, report. Returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = (|| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config {
                field: "--threads".into(),
                message: e.to_string(),
            })?;
        let out = pool.install(|| execute(cli))?;
        out.write(&cli.out_dir)?;
        Ok::<_, CliError>(out)
    })();
    match result {
        Ok(out) => {
            print!("{}", out.report);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
