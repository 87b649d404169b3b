use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] lamplighter::Error),

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Invalid user input detected by the library counts as a usage error.
    pub fn input(e: lamplighter::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Core(e) if e.is_budget() => ExitCode::from(3),
            CliError::Core(e) if is_input_error(e) => ExitCode::from(2),
            _ => ExitCode::from(4),
        }
    }
}

fn is_input_error(e: &lamplighter::Error) -> bool {
    use lamplighter::Error::*;
    matches!(
        e,
        UnknownFamily(_)
            | InvalidSpec { .. }
            | Asymmetric { .. }
            | SelfLoop(_)
            | NonPositiveConductance { .. }
            | UnknownVertex(_)
            | IsolatedVertex(_)
            | InvalidProbability(_)
            | InvalidNumber(_)
            | InvalidArgument(_)
    )
}
