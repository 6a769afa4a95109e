use std::path::PathBuf;

use finadapt_core::analysis::AnalysisError;
use finadapt_core::optimizer::CmaesError;
use finadapt_core::plant::PlantError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("run {0:?} not found")]
    MissingRun(String),
    #[error("run {run:?} has no snapshot after generation {generation}")]
    MissingSnapshot { run: String, generation: u64 },
    #[error("{}: schema {found:?} is not compatible with {expected:?}", path.display())]
    SchemaMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{}: {reason}", path.display())]
    CorruptLog { path: PathBuf, reason: String },
    #[error("run {run:?}, generation {generation}: {source}")]
    Optimizer {
        run: String,
        generation: u64,
        source: CmaesError,
    },
    #[error("run {run:?}: {source}")]
    Plant { run: String, source: PlantError },
    #[error("run {run:?}: {source}")]
    Analysis { run: String, source: AnalysisError },
    #[error("run {0:?} has not finished")]
    Unfinished(String),
    #[error("report: {0}")]
    Report(String),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Json { path, source }
    }
}
