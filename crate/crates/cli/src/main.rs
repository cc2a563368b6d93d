use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pomdp_approx_cli::{run, CommandKind};

/// Finite approximation toolkit for continuous-space POMDPs: build quantized
/// surrogate models, solve belief and finite-window MDPs, run tabular
/// Q-learning, and evaluate policies and bounds.
#[derive(Parser)]
#[command(name = "pomdp-approx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<String>,
    /// Override any config field: --override key.path=value (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the finite surrogate model and dump its tables.
    Discretize(RunArgs),
    /// Solve the belief MDP on a simplex grid.
    SolveBelief(RunArgs),
    /// Build and solve the finite-window MDP.
    SolveWindow(RunArgs),
    /// Finite-memory Q-learning against the true model.
    LearnWindow(RunArgs),
    /// Belief-grid Q-learning on the surrogate model.
    LearnBelief(RunArgs),
    /// Stability diagnostics and performance bounds.
    Bounds(RunArgs),
    /// Evaluate window, belief, and random controllers side by side.
    Evaluate(RunArgs),
    /// Tradeoff study over observation bins and window lengths.
    Sweep(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Discretize(a) => (CommandKind::Discretize, a),
        Command::SolveBelief(a) => (CommandKind::SolveBelief, a),
        Command::SolveWindow(a) => (CommandKind::SolveWindow, a),
        Command::LearnWindow(a) => (CommandKind::LearnWindow, a),
        Command::LearnBelief(a) => (CommandKind::LearnBelief, a),
        Command::Bounds(a) => (CommandKind::Bounds, a),
        Command::Evaluate(a) => (CommandKind::Evaluate, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
    };
    match run(
        kind,
        &args.config,
        args.seed,
        args.out.as_deref(),
        &args.overrides,
    ) {
        Ok(artifacts) => {
            for path in artifacts {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
