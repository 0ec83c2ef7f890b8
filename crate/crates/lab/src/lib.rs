//! Experiment driver: configuration files, runs of the strip and elastica
//! solvers, diagnostics, truncation sweeps and energy checks, each writing
//! CSV tables and a run manifest.

pub mod config;
pub mod fixture;
pub mod io;
pub mod manifest;
pub mod runs;

pub use config::{ExperimentConfig, RawConfig};
pub use manifest::RunManifest;

use thiserror::Error;

/// Failures with their process exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
    #[error("output error: {0}")]
    Io(String),
}

impl LabError {
    /// `1` non-convergence, `2` configuration or output problems, `3`
    /// diagnostic failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::NoConvergence(_) => 1,
            LabError::Config(_) | LabError::Io(_) => 2,
            LabError::Diagnostic(_) => 3,
        }
    }

    /// Classifies a library error, prefixing `context`.
    pub fn from_core(context: &str, e: thinbeam::Error) -> Self {
        use thinbeam::Error as E;
        let msg = format!("{context}: {e}");
        match e {
            E::Config(_) => LabError::Config(msg),
            E::NoConvergence { .. } | E::Guard { .. } => LabError::NoConvergence(msg),
            E::Domain { .. } | E::Diagnostic(_) | E::Truncation(_) => LabError::Diagnostic(msg),
        }
    }
}
