//! Scenario files, commands and artifact writers behind the `hetrdme` binary.

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::Path;

use thiserror::Error;

use hetrdme_core::analysis::AnalysisError;

pub use scenario::{parse_scenario, parse_scenario_str, LoadedScenario, ScenarioError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for failed checks, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ChecksFailed(_) => 1,
            _ => 2,
        }
    }
}
