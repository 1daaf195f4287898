//! Scenario runner for `paramp-core`: TOML scenarios in, field files and
//! fixed-format summaries out.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use paramp_core::detection::DetectionError;
use paramp_core::propagation::PropagationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("[{section}] {source}")]
    Invalid {
        section: &'static str,
        #[source]
        source: paramp_core::Error,
    },
    #[error("{0}")]
    Core(#[from] paramp_core::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(section: &'static str, source: impl Into<paramp_core::Error>) -> Self {
        CliError::Invalid {
            section,
            source: source.into(),
        }
    }

    /// 1 for IO failures, 2 for rejected input, 3 for numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Invalid { source, .. } | CliError::Core(source) => {
                if is_numeric(source) {
                    3
                } else {
                    2
                }
            }
        }
    }
}

fn is_numeric(e: &paramp_core::Error) -> bool {
    use paramp_core::Error as E;
    matches!(
        e,
        E::Transfer(_)
            | E::Propagation(PropagationError::Transfer(_))
            | E::Detection(DetectionError::Transfer(_))
    )
}

pub(crate) fn core_err(e: impl Into<paramp_core::Error>) -> CliError {
    CliError::Core(e.into())
}
