//! Command implementations behind the `mite` binary: `run`, `sweep` and `verify`.

pub mod config;
pub mod experiment;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

use thiserror::Error;

pub use config::{load_run_config, load_sweep_config, RunConfig, SweepConfig};
pub use experiment::{build_experiment, Experiment};
pub use run::{cmd_run, RunOutcome};
pub use sweep::{cmd_sweep, SweepOutcome, SweepPoint};
pub use verify::{cmd_verify, CheckResult, VerifyOptions, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate model: {0}")]
    Degenerate(mite_core::Error),

    #[error(transparent)]
    Core(mite_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<mite_core::Error> for CliError {
    fn from(e: mite_core::Error) -> Self {
        use mite_core::Error as E;
        match e {
            E::DegenerateFixedPoint { .. } | E::FixedPointDefect(_) | E::AnnihilatedTarget | E::ResidualTooLarge { .. } => {
                CliError::Degenerate(e)
            }
            E::InvalidEpsilon(_)
            | E::PositivityViolated { .. }
            | E::EpsilonTooLarge { .. }
            | E::InvalidParameter(_)
            | E::AngleOutOfBudget { .. }
            | E::NotPowerOfTwo(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
