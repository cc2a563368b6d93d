//! Library side of the experiment runner, split out so integration tests can
//! run subcommands in-process.

pub mod commands;
pub mod config;

pub use commands::{run_command, CommandKind};
pub use config::{config_hash, load_config, ExperimentConfig};

/// Runner errors carry their exit code class: validation problems exit 1,
/// runtime failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Load the config and execute one subcommand, returning the artifact paths.
pub fn run(
    kind: CommandKind,
    config_path: &std::path::Path,
    seed: Option<u64>,
    out: Option<&str>,
    overrides: &[String],
) -> Result<Vec<std::path::PathBuf>, CliError> {
    let config = load_config(config_path, seed, out, overrides)?;
    run_command(kind, &config)
}
