use std::path::PathBuf;
use thiserror::Error;

use crate::integrator::BlowUpReport;

pub type Result<T, E = QgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QgError {
    #[error("grid of {m} points per dimension cannot represent n_max = {n_max} (need at least {required})")]
    ResolutionTooSmall {
        m: usize,
        n_max: usize,
        required: usize,
    },

    #[error("field resolutions differ: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("Hermitian symmetry violated by {defect:e} (tolerance {tol:e})")]
    SymmetryViolation { defect: f64, tol: f64 },

    #[error("field contains non-finite amplitude at mode ({j1}, {j2})")]
    NonFinite { j1: i32, j2: i32 },

    #[error("zero wavevector is not allowed here")]
    ZeroWaveVector,

    #[error("mode ({j1}, {j2}) lies outside the truncation n_max = {n_max}")]
    ModeOutsideTruncation { j1: i32, j2: i32, n_max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("simulation blew up at t = {}", .0.time)]
    BlowUp(Box<BlowUpReport>),

    #[error("missing diagnostics: {0}")]
    MissingDiagnostics(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl QgError {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        QgError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QgError::Io {
            path: path.into(),
            source,
        }
    }
}
