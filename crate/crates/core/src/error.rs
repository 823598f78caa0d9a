use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LcmError>;

#[derive(Debug, Error)]
pub enum LcmError {
    /// Malformed or inconsistent caller input (dimension mismatch, non-finite value, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A quadratic-memory path was asked to handle a dimension above the dense cap.
    #[error("dimension {dim} exceeds dense cap {cap}")]
    Size { dim: usize, cap: usize },

    /// Coordinates too close together for the kernel to be invertible.
    #[error("kernel is singular: adjacent sorted coordinates {left} and {right} differ by {gap:e} (tolerance {tolerance:e})")]
    Singular {
        left: usize,
        right: usize,
        gap: f64,
        tolerance: f64,
    },

    #[error("optimization diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected \"FMX1\", found {found:?}")]
    Magic { found: Vec<u8> },

    #[error("truncated or oversized file: expected {expected} bytes, found {actual}")]
    Length { expected: u64, actual: u64 },

    #[error("non-finite value {value} at row {row}, column {col}")]
    Data { row: usize, col: usize, value: f64 },

    #[error("ragged CSV row at line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("CSV parse error at line {line} column {column}: {message}")]
    Csv {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("unsupported model version {found} (expected 1)")]
    Version { found: i64 },

    #[error("model schema error: {0}")]
    Schema(String),
}

impl LcmError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        LcmError::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LcmError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the caller invoked the library
    /// (as opposed to IO, format or numerical failures).
    pub fn is_usage(&self) -> bool {
        matches!(self, LcmError::Input(_) | LcmError::Size { .. })
    }
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(LcmError::input(format!(
            "{what} has length {got}, expected {expected}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    if let Some((i, v)) = xs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(LcmError::input(format!("{what}[{i}] is not finite ({v})")));
    }
    Ok(())
}
