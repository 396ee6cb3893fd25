//! `qhe`: config-driven experiments on scheduled multilevel heat engines.
//!
//! Subcommands: steady | transient | sweep | signature | verify.
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::SweepAxis;
use config::RunConfig;

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "configuration error: {msg}"),
            AppError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            AppError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qhe",
    about = "Scheduled multilevel quantum heat engines in Liouville space",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in experiment preset: fig6a, fig6b, fig7, fig9, or fig10.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,
    /// Worker threads for sweep grids (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output format, overriding the config.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    Action,
    Gamma,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state ledger of every configured engine type.
    Steady,
    /// Cumulative work and heat along a transient from a fixed initial state.
    Transient,
    /// Steady-state sweep over action or bath rate.
    Sweep {
        #[arg(long, value_enum, default_value = "action")]
        axis: Axis,
    },
    /// Power against the coherence-free bound over a grid of cycle times.
    Signature,
    /// Run the invariant suite (structure, CPTP, splitting bound, first law,
    /// Carnot, rearrangement, passivity).
    Verify,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), None) => config::load_config_file(path)?,
        (None, Some(name)) => config::preset(name)?,
        (None, None) => RunConfig::default(),
        (Some(_), Some(_)) => unreachable!("clap forbids combining --config and --preset"),
    };
    if let Some(format) = cli.format {
        config.output.format = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
        .into();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, AppError> {
    let config = resolve_config(cli)?;
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Steady => commands::cmd_steady(&config, &cli.out).map(|()| true),
        Command::Transient => commands::cmd_transient(&config, &cli.out).map(|()| true),
        Command::Sweep { axis } => {
            let axis = match axis {
                Axis::Action => SweepAxis::Action,
                Axis::Gamma => SweepAxis::Gamma,
            };
            commands::cmd_sweep(&config, axis, &cli.out).map(|()| true)
        }
        Command::Signature => commands::cmd_signature(&config, &cli.out).map(|()| true),
        Command::Verify => commands::cmd_verify(&config, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            match e {
                AppError::Config(_) => ExitCode::from(2),
                AppError::Numerical(_) | AppError::Io(_) => ExitCode::from(1),
            }
        }
    }
}
