//! Configuration, pipeline orchestration and diagnostics behind the
//! `switchopt` command.

pub mod checks;
pub mod config;
pub mod output;
pub mod pipeline;

use serde::Serialize;

pub use checks::{run_checks, CheckOptions, CheckReport, CheckRow};
pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use pipeline::{run_filter, run_pipeline, run_solve, PipelineReport};

/// Pipeline stage an error is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Solve,
    Filter,
    Output,
    Check,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Solve => "solve",
            Stage::Filter => "filter",
            Stage::Output => "output",
            Stage::Check => "check",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, thiserror::Error, Serialize)]
#[error("{stage} stage failed: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, cause: impl std::fmt::Display) -> Self {
        Self {
            stage,
            message: cause.to_string(),
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "status": "error", "stage": self.stage, "message": self.message }).to_string()
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T, E: std::fmt::Display> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|e| StageError::new(stage, e))
    }
}
