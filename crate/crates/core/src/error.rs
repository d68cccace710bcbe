use thiserror::Error;

/// Errors reported by grid construction, field operators and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range. `field` names the offending input.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("domain of extent {extent} is not an integer multiple of the pore period {period}")]
    NonIntegralTiling { extent: f64, period: f64 },

    #[error("resolution n = {n} puts fewer than 4 cells across an obstacle of radius {radius}")]
    UnresolvedObstacle { n: usize, radius: f64 },

    #[error("frame mismatch: expected {expected}, found {found}")]
    FrameMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: [usize; 3],
        found: [usize; 3],
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("permeability table is empty")]
    EmptyTable,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
