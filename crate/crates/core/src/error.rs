//! Error type shared by every module of the crate.

use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("infeasible parameters: {0}")]
    Feasibility(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("price {price} outside the no-arbitrage band ({lower}, {upper})")]
    Arbitrage { price: f64, lower: f64, upper: f64 },
    #[error("numerical failure in {what}: achieved tolerance {achieved:e}")]
    Numerical { what: String, achieved: f64 },
    #[error("covariance matrix is not positive semidefinite on grid {grid}")]
    SingularCovariance { grid: String },
    #[error("Fourier contour infeasible: {0}")]
    Contour(String),
    #[error("hedge system unstable: condition number {condition:e} exceeds {limit:e}")]
    UnstableHedge { condition: f64, limit: f64 },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::Unsupported(_)
            | Error::Feasibility(_)
            | Error::Range(_)
            | Error::Arbitrage { .. }
            | Error::Parse { .. }
            | Error::Json(_) => ErrorKind::Validation,
            Error::Io { .. } => ErrorKind::Io,
            Error::Domain(_)
            | Error::Numerical { .. }
            | Error::SingularCovariance { .. }
            | Error::Contour(_)
            | Error::UnstableHedge { .. }
            | Error::Calibration(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            achieved,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
