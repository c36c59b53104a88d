use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] uabs_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config line {line}: {reason}")]
    ConfigLine { line: usize, reason: String },
    #[error("bad override: {0}")]
    Override(String),
    #[error("trace line {line}: {reason}")]
    TraceParse { line: usize, reason: String },
    #[error("trace line {line}: point ({x}, {y}) lies outside the {width} x {height} m area")]
    TraceBounds { line: usize, x: f64, y: f64, width: f64, height: f64 },
    #[error("trace coverage: {0}")]
    TraceCoverage(String),
    #[error("checkpoint config hash {found} does not match the active config ({expected})")]
    HashMismatch { expected: String, found: String },
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        SimError::Io { path: path.to_path_buf(), source }
    }
}

pub type SimResult<T> = Result<T, SimError>;
