use thiserror::Error;

/// Broad classes of failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: {msg}")]
    Validation { op: &'static str, msg: String },

    #[error("{op}: dimension mismatch ({left} vs {right})")]
    DimensionMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{op}: dimension {dim} is not supported")]
    UnsupportedDimension { op: &'static str, dim: usize },

    #[error("{op}: group construction failed: {msg}")]
    Construction { op: &'static str, msg: String },

    #[error("{op}: degenerate spectrum: {msg}")]
    DegenerateSpectrum { op: &'static str, msg: String },

    #[error("{op}: normalization failed: {msg}")]
    Normalization { op: &'static str, msg: String },

    #[error("{op}: gauge map is singular or ill-conditioned (condition number {cond:e})")]
    Gauge { op: &'static str, cond: f64 },

    #[error("{op}: bound is vacuous (denominator {denominator})")]
    BoundVacuous { op: &'static str, denominator: f64 },

    #[error("{op}: fit failed: {msg}")]
    Fit {
        op: &'static str,
        msg: String,
        trace: Vec<f64>,
    },

    #[error("{op}: not a unitary 2-design (twirl residual {residual:e})")]
    NotTwoDesign { op: &'static str, residual: f64 },

    #[error("{op}: experiment {index} failed: {source}")]
    Experiment {
        op: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Validation {
            op,
            msg: msg.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation { .. }
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension { .. }
            | Error::Json(_) => ErrorClass::Validation,
            Error::Io(_) => ErrorClass::Io,
            Error::Experiment { source, .. } => source.class(),
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
