//! `gigwalk`: simulations and verification suites for the GIG matrix walk.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on
//! usage or domain errors. Reports are written on exit 0 and 1.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Settings, UsageError};
use output::{write_records, Format};

#[derive(Debug, Parser)]
#[command(
    name = "gigwalk",
    version,
    about = "Simulate the GIG matrix walk and run its verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// GIG index λ of the increments.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// GIG parameter a (symmetric case a = b).
    #[arg(long, global = true)]
    a: Option<f64>,

    /// Scale δ of the walk.
    #[arg(long, global = true, default_value_t = 1.0)]
    delta: f64,

    /// Path length, or the largest n. Defaults: simulate 100, converge 200,
    /// reconstruct and verify 50.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Monte Carlo sample size. Defaults: 100000 draws, or 1000 paths for
    /// reconstruct.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Nodes of the logarithmic quadrature grid on [1e-6, 1e6].
    #[arg(long, global = true, default_value_t = gigwalk::grid::LogGrid::DEFAULT_COUNT)]
    grid_points: usize,

    /// Master seed.
    #[arg(long, global = true, env = "GIGWALK_SEED", default_value_t = 0)]
    seed: u64,

    /// Tolerance of the command's main check. Defaults: intertwine and
    /// verify 1e-6 (stationarity 1e-7), characterize 1e-7, moments 0.02,
    /// reconstruct 1e-6, dufresne and converge 1e-12 (series truncation).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads for Monte Carlo work. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Record wall-clock time per check (reports are then not reproducible
    /// byte for byte).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write one path: k, gamma, x, z, n_na, n_an.
    Simulate,
    /// Intertwining, detailed balance, stationarity, Dufresne and
    /// reconstruction checks.
    Verify,
    /// KS test of the N_∞ series against its inverse-gamma law.
    Dufresne,
    /// Intertwining residuals at z = 0.2, 1, 5.
    Intertwine,
    /// Conditional-law discrepancy for GIG increments and two controls.
    Characterize,
    /// KS between N_n and N_∞ for n = 10, 50 and --steps.
    Converge,
    /// Numeric against asymptotic log-moments, m = 1..4.
    Moments,
    /// Finite and limit reconstruction of X from the Z path.
    Reconstruct,
}

impl Cli {
    fn settings(&self) -> Result<Settings, UsageError> {
        let lambda = self.lambda.ok_or_else(|| UsageError("--lambda is required".into()))?;
        let a = self.a.ok_or_else(|| UsageError("--a is required".into()))?;
        if !lambda.is_finite() {
            return Err(UsageError(format!("--lambda must be finite, got {lambda}")));
        }
        for (flag, value) in [("--a", a), ("--delta", self.delta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(UsageError(format!("{flag} must be positive, got {value}")));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(UsageError(format!("--tol must be positive, got {tol}")));
            }
        }
        if self.steps == Some(0) {
            return Err(UsageError("--steps must be positive".into()));
        }
        if self.samples.is_some_and(|n| n < 2) {
            return Err(UsageError("--samples must be at least 2".into()));
        }
        if self.grid_points < 2 {
            return Err(UsageError("--grid-points must be at least 2".into()));
        }
        if self.workers == Some(0) {
            return Err(UsageError("--workers must be positive".into()));
        }
        Ok(Settings {
            lambda,
            a,
            delta: self.delta,
            steps: self.steps,
            samples: self.samples,
            grid_points: self.grid_points,
            seed: self.seed,
            tol: self.tol,
            timing: self.timing,
        })
    }
}

fn run(cli: &Cli) -> Result<bool, UsageError> {
    let settings = cli.settings()?;
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| UsageError(e.to_string()))?;
    }
    let report = match cli.command {
        Command::Simulate => commands::simulate(&settings),
        Command::Verify => commands::verify(&settings),
        Command::Dufresne => commands::dufresne(&settings),
        Command::Intertwine => commands::intertwine(&settings),
        Command::Characterize => commands::characterize(&settings),
        Command::Converge => commands::converge(&settings),
        Command::Moments => commands::moments(&settings),
        Command::Reconstruct => commands::reconstruct(&settings),
    }?;
    write_records(&report.records, cli.format, cli.out.as_deref())
        .map_err(|e| UsageError(format!("cannot write report: {e}")))?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
