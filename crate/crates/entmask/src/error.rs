//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by model construction, quadrature, series evaluation,
/// simulation, and file handling.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An outcome index addressed a mask family or matrix outside `0..d`.
    #[error("index {index} out of range for dimension {d}")]
    Index { index: usize, d: usize },

    /// An adaptive quadrature stopped before reaching the requested
    /// accuracy; `achieved` is the error estimate actually reached.
    #[error("quadrature did not converge: achieved {achieved:e}, required {required:e}")]
    Convergence { achieved: f64, required: f64 },

    /// A series bracket failed to close to the target width within the
    /// term budget. The open bracket is carried so callers can still
    /// inspect the partial result.
    #[error(
        "bound bracket did not close: [{lower}, {upper}] has width {width:e} > target {target:e} after {n_terms} terms"
    )]
    BracketOpen {
        lower: f64,
        upper: f64,
        width: f64,
        target: f64,
        n_terms: u64,
    },

    /// A histogram is too coarse to resolve the requested mask geometry.
    #[error(
        "histogram resolution error: bin width {bin_width} mm exceeds a quarter slit width ({max_allowed} mm)"
    )]
    Resolution { bin_width: f64, max_allowed: f64 },

    /// A count matrix with zero total counts cannot be normalized.
    #[error("count matrix has zero total counts; statistics are undefined")]
    EmptyCounts,

    /// A file could not be parsed; `line` is 1-based (0 when unknown).
    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A file could not be read or written.
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Process exit code convention: 2 for parameter/usage/parse errors,
    /// 3 for convergence failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Index { .. }
            | Error::Resolution { .. }
            | Error::EmptyCounts
            | Error::Parse { .. }
            | Error::Io { .. } => 2,
            Error::Convergence { .. } | Error::BracketOpen { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
