//! `herglotz` command-line front-end.
//!
//! Exit codes: 0 success, 1 input error, 2 solver non-convergence,
//! 3 condition failure, 4 invariance failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod check;
mod common;
mod noether;
mod solve;

use common::Outcome;

#[derive(Debug, Parser)]
#[command(name = "herglotz", version, about = "Solve and verify Herglotz variational problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shoot for the extremal and write trajectory.csv and solution.json.
    Solve(SolveArgs),
    /// Evaluate the necessary conditions and write checks.json.
    Check(CheckArgs),
    /// Check transformation families and their conserved quantities.
    Noether(NoetherArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Number of RK4 steps on [a, b].
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Initial velocity guess, comma separated (defaults to zeros).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    guess: Option<Vec<f64>>,
    /// Output directory for the artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print one JSON document on stdout instead of the text summary.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Newton tolerance on the transversality residual.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Maximum Newton iterations.
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Pass threshold for every residual's max_abs.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Newton tolerance when the trajectory comes from solving.
    #[arg(long, default_value_t = 1e-10)]
    newton_tol: f64,
    /// Read the trajectory from this CSV instead of solving.
    #[arg(long)]
    traj: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoetherArgs {
    #[command(flatten)]
    common: Common,
    /// Family to check (repeatable).
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    family: Vec<String>,
    /// Check every family in the problem file.
    #[arg(long)]
    all: bool,
    /// Constancy tolerance for the conserved quantity.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Newton tolerance when the trajectory comes from solving.
    #[arg(long, default_value_t = 1e-10)]
    newton_tol: f64,
    /// Read the trajectory from this CSV instead of solving.
    #[arg(long)]
    traj: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Check(args) => check::run(args),
        Command::Noether(args) => noether::run(args),
    };
    match result {
        Ok(outcome) => outcome.code(),
        Err(err) => {
            eprintln!("error: {err:#}");
            Outcome::InputError.code()
        }
    }
}
