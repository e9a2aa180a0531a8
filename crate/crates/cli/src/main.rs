//! `gdrb`: decompositions, simulated RB data, fits and figure data from a
//! single JSON run config.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gdrb::ErrorClass;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Core(gdrb::Error),
    Validation(String),
    Io(String),
    /// `verify` found failing checks.
    Checks(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Numerical => 2,
                ErrorClass::Io => 3,
            },
            CliError::Validation(_) => 1,
            CliError::Checks(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
            CliError::Checks(n) => write!(f, "verify: {n} check(s) failed"),
        }
    }
}

impl From<gdrb::Error> for CliError {
    fn from(e: gdrb::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "gdrb", version, about = "Randomized benchmarking under gate-dependent noise")]
struct Cli {
    /// JSON run config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for reproduce-fig1). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// p, t, L, R and the perturbation bounds of the configured gate set.
    Decompose,
    /// Monte Carlo decay data as CSV.
    Simulate,
    /// Exact sequence averages at the `bruteforce_m` lengths as CSV.
    Bruteforce,
    /// Fit a decay CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// `A p^m + B t^m` with its error bound, optionally against a decay CSV.
    Theory {
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// First-order analysis of the half-rotated depolarizing model.
    Counterexample {
        #[arg(long, default_value_t = 0.99)]
        nu: f64,
        #[arg(long, default_value_t = 0.09)]
        theta: f64,
    },
    /// Interval and delta data over `r_grid` (left.csv, right.csv).
    #[command(name = "reproduce-fig1")]
    ReproduceFig1,
    /// Run the invariant checks and print a pass/fail table.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.or_else(|| cfg.out.as_ref().map(PathBuf::from));
    match cli.command {
        Command::Decompose => commands::decompose(&cfg, out.as_deref()),
        Command::Simulate => commands::simulate(&cfg, out.as_deref()),
        Command::Bruteforce => commands::bruteforce(&cfg, out.as_deref()),
        Command::Fit { input } => commands::fit(&cfg, &input, out.as_deref()),
        Command::Theory { input } => commands::theory(&cfg, input.as_deref(), out.as_deref()),
        Command::Counterexample { nu, theta } => commands::counterexample(nu, theta, out.as_deref()),
        Command::ReproduceFig1 => {
            commands::reproduce_fig1(&cfg, out.as_deref().unwrap_or_else(|| "fig1".as_ref()))
        }
        Command::Verify => verify::run(&cfg, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
