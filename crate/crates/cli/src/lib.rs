//! Command-line pipelines for the `fredholm` density-ratio toolkit.
//!
//! Each command reads an [`ExperimentConfig`], computes everything in memory
//! and only then writes its artifacts (temp file + rename), so a failed run
//! leaves no partial outputs. Every run writes `config.json`, the fully
//! resolved config, which reproduces the run bit for bit.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub use commands::{run, Artifact, Command};
pub use config::ExperimentConfig;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid config or inputs (exit 2).
    Config(String),
    /// Numerical failure during fitting (exit 3).
    Numerical(String),
    /// Could not write outputs (exit 1).
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Output(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numerical(_) => "numerical",
            Self::Output(_) => "output",
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            Self::Config(r) | Self::Numerical(r) | Self::Output(r) => r,
        }
    }

    /// One-line JSON diagnostic.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "reason": self.reason(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.reason())
    }
}

impl std::error::Error for CliError {}

impl From<fredholm::Error> for CliError {
    fn from(e: fredholm::Error) -> Self {
        use fredholm::Error as E;
        match e {
            E::Numerical(_) | E::RankDeficient { .. } | E::Degenerate(_) => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}
