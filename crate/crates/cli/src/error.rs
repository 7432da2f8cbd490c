use std::path::PathBuf;

use hzreach::HzError;
use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Computation failed: capacity, solver, numerics.
    pub const FAILURE: i32 = 1;
    /// Bad arguments, unreadable or invalid input files.
    pub const INVALID_INPUT: i32 = 2;
    pub const UNSAFE: i32 = 3;
    pub const INDETERMINATE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("invalid {what} in {path}: {reason}")]
    Invalid {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] HzError),
}

/// Machine-readable error printed on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<&'static str>,
}

impl CliError {
    pub fn invalid(what: &'static str, path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Invalid {
            what,
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Invalid { .. } | CliError::Usage(_) => exit::INVALID_INPUT,
            CliError::Core(HzError::Shape { .. } | HzError::NonFinite(_) | HzError::Document(_)) => exit::INVALID_INPUT,
            _ => exit::FAILURE,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, path, hint) = match self {
            CliError::Read { path, .. } => ("read", Some(path), None),
            CliError::Write { path, .. } => ("write", Some(path), None),
            CliError::Invalid { path, .. } => ("invalid_input", Some(path), None),
            CliError::Usage(_) => ("usage", None, None),
            CliError::Core(HzError::Capacity { .. } | HzError::TooLarge { .. }) => (
                "capacity",
                None,
                Some("enable complexity reduction in the scenario (\"reduction\": {\"n_g\": .., \"n_b\": ..})"),
            ),
            CliError::Core(HzError::Solver { .. }) => ("solver", None, None),
            CliError::Core(HzError::Shape { .. } | HzError::NonFinite(_) | HzError::Document(_)) => {
                ("invalid_input", None, None)
            }
            CliError::Core(_) => ("computation", None, None),
        };
        ErrorReport {
            kind,
            message: self.to_string(),
            path: path.map(|p| p.display().to_string()),
            hint,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
