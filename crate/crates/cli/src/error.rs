use std::path::Path;

use thiserror::Error;

/// Failure of a subcommand, mapped to the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable input, bad flags, invalid configuration: exit 2.
    #[error("{0}")]
    Input(String),
    /// Degenerate samples and other numerical failures: exit 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<manifold_boundary::Error> for CliError {
    fn from(e: manifold_boundary::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        let pos = e
            .position()
            .map(|p| format!("line {}: ", p.line()))
            .unwrap_or_default();
        CliError::Input(format!("{pos}{e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("JSON: {e}"))
    }
}
