use thiserror::Error;

use crate::metric::PointId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library.
///
/// Input problems (`OutOfRange`, `Parse`, `InvalidMetric`, ...) and structural
/// aborts of the construction (`Structural`) are kept apart so that front ends
/// can map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point id {id} out of range for a space of {size} points")]
    OutOfRange { id: usize, size: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate triple ({0}, {1}, {2}): coincident points")]
    DegenerateTriple(PointId, PointId, PointId),

    #[error("triple ({0}, {1}, {2}) is not embeddable: cosine {3} outside [-1, 1]")]
    NonMetricTriple(PointId, PointId, PointId, f64),

    #[error("input is not a metric: {0}")]
    InvalidMetric(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: usize,
        message: String,
    },

    #[error("construction aborted: {0}")]
    Structural(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_structural(&self) -> bool {
        matches!(self, Error::Structural(_))
    }
}

/// A non-fatal finding recorded during a run.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Warning {
    /// Scale index the finding belongs to.
    pub scale: i32,
    /// Short machine-readable tag, e.g. `le2` or `H3`.
    pub check: String,
    pub detail: String,
}

impl Warning {
    pub fn new(scale: i32, check: impl Into<String>, detail: impl Into<String>) -> Self {
        Warning {
            scale,
            check: check.into(),
            detail: detail.into(),
        }
    }
}
