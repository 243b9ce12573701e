//! `codipas`: equilibrium oracles, learning simulations and mean ODEs from
//! the command line.
//!
//! Exit codes: 0 success, 2 input error, 3 I/O error, 4 learner violation,
//! 1 anything else.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Learner(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
            CliError::Learner(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<codipas::Error> for CliError {
    fn from(e: codipas::Error) -> Self {
        use codipas::Error as E;
        let msg = e.to_string();
        if e.is_learner_violation() {
            return CliError::Learner(msg);
        }
        let mut root = &e;
        while let E::Episode { source, .. } = root {
            root = source;
        }
        match root {
            E::Domain(_) | E::Dimension { .. } | E::ActionOutOfRange { .. } | E::Config(_) => CliError::Input(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "codipas", version, about = "Combined payoff-and-strategy learning in two-player zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Saddle point (and logit equilibrium with --epsilon) of a matrix game.
    Solve(SolveArgs),
    /// Run every seed of an experiment file and write CSVs and plots.
    Simulate(RunArgs),
    /// Integrate one of the mean dynamics.
    Ode(OdeArgs),
    /// Run an experiment and measure its distance to a mean ODE on the
    /// learning-rate clock.
    Compare(CompareArgs),
}

/// Where the game comes from: an experiment file or an inline matrix.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct GameSource {
    /// Experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Row-major payoffs to player 1, rows separated by `;`, e.g. "5,2;1,3".
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub game: GameSource,
    /// Also solve the logit equilibrium at this temperature.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// List every saddle point found by support enumeration.
    #[arg(long)]
    pub all: bool,
}

/// Flags shared by `simulate` and `compare`.
#[derive(Args)]
pub struct RunArgs {
    /// Experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: the file's `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds run in parallel (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write SVG charts.
    #[arg(long, conflicts_with = "no_plots")]
    pub plots: bool,
    /// Do not write SVG charts even if the file asks for them.
    #[arg(long)]
    pub no_plots: bool,
    /// Comma-separated seeds, replacing the file's list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Temperature for every logit learner (and the compared ODE).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args)]
pub struct OdeArgs {
    /// One of replicator, adjusted_replicator, smooth_br, coupled_thm1,
    /// composite_T1, composite_T2.
    pub system: String,
    #[command(flatten)]
    pub game: GameSource,
    /// Logit temperature (default: player 1's in the file, else 0.05).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub k1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k2: f64,
    #[arg(long, default_value_t = codipas::ode::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Start time (default 0; `dt` for composite_T2).
    #[arg(long)]
    pub t0: Option<f64>,
    /// Record every this many steps.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    /// Initial strategy of player 1, comma-separated (default: the file's, else uniform).
    #[arg(long, value_delimiter = ',')]
    pub f0: Option<Vec<f64>>,
    /// Initial strategy of player 2.
    #[arg(long, value_delimiter = ',')]
    pub g0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plots: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Mean ODE to compare with (default: the file's `[compare]` system).
    pub system: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Ode(a) => commands::ode(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
