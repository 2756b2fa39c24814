use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("singularity in {what} at {at}")]
    Singularity { what: &'static str, at: f64 },

    #[error("degenerate {what}: {detail}")]
    Degenerate { what: &'static str, detail: String },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("maximum number of steps ({steps}) exceeded at x = {x}")]
    MaxSteps { steps: usize, x: f64 },

    #[error("non-finite right-hand side at x = {x}")]
    NonFinite { x: f64 },

    #[error("empty validity domain: {0}")]
    EmptyDomain(String),

    #[error("complex branch required: {0}")]
    ComplexBranch(String),

    #[error("f3 vanishes at x = {location}; canonical reduction is singular there")]
    SingularReduction { location: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("point {t} lies outside the validity domain [{lo}, {hi}]")]
    OutsideDomain { t: f64, lo: f64, hi: f64 },

    #[error("no convergence in {0}")]
    NoConvergence(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
