use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tuning_core::{Direction, Route};

#[derive(Debug, Parser)]
#[command(
    name = "tuning",
    version,
    about = "Optimal intervention control of absorbing Markov chains"
)]
pub struct Cli {
    /// Write the result document here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Also write the parsed model back out as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub echo_model: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model (and optionally a strategy) for structural errors.
    Validate {
        #[command(flatten)]
        model: ModelArg,
        /// Strategy file to check against the model.
        #[arg(long, value_name = "FILE")]
        strategy: Option<PathBuf>,
    },
    /// Absorption probabilities and expected income before absorption.
    Analyze {
        #[command(flatten)]
        model: ModelArg,
        /// Threshold for the strict positivity check.
        #[arg(long, default_value_t = tuning_core::absorption::DEFAULT_POSITIVITY_EPSILON)]
        epsilon: f64,
    },
    /// Stationary profit per embedded step of one strategy.
    Indicator {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = Route::Embedded, value_parser = parse_route)]
        route: Route,
    },
    /// Numerator, denominator or test-function table over all deterministic controls.
    Table {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = Which::C)]
        which: Which,
    },
    /// Optimal deterministic control.
    Solve {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = Direction::Maximize, value_parser = parse_direction)]
        direction: Direction,
        /// Check the optimum against this many random strategies.
        #[arg(long, default_value_t = 0, value_name = "K")]
        refute_samples: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Also write the full test-function table as CSV.
        #[arg(long, value_name = "PATH")]
        table_csv: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the stationary profit.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 100_000, value_name = "K")]
        cycles: u64,
        #[arg(long, default_value_t = 1, value_name = "R")]
        replications: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Longest free-evolution segment tolerated, in steps.
        #[arg(long, default_value_t = tuning_core::simulator::DEFAULT_CYCLE_LIMIT, value_name = "STEPS")]
        cycle_limit: u64,
    },
    /// One simulated trajectory, event by event.
    Trajectory {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 100, value_name = "N")]
        max_steps: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model file (JSON).
    #[arg(long = "model", value_name = "FILE")]
    pub path: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct StrategyArg {
    /// Strategy file (JSON with `alpha0` and `alpha1`).
    #[arg(long, value_name = "FILE")]
    pub strategy: Option<PathBuf>,
    /// Deterministic strategy: transfer targets after boundary 0 and 1.
    #[arg(long, num_args = 2, value_names = ["M0", "M1"])]
    pub degenerate: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "TUNING_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    A,
    B,
    C,
}

fn parse_route(s: &str) -> Result<Route, String> {
    s.parse()
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse()
}
