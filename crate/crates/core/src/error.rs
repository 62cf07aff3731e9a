use thiserror::Error;

use crate::semiconj::FiberEstimate;

/// Errors raised by the library. Each variant names the violated condition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("inadmissible matrix: {0}")]
    Admissibility(String),
    #[error("degenerate matrix: {0}")]
    Degeneracy(String),
    #[error("center-expansion inequality violated: value {value} <= 1 (m = {m})")]
    Inequality { value: f64, m: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("center profile: {0}")]
    Profile(String),
    #[error("outside the shadowing regime: {0}")]
    ShadowingRegime(String),
    #[error("inversion failed: {0}")]
    Inversion(String),
    #[error("ambiguous fiber of length {} at the target", .0.length)]
    Ambiguity(Box<FiberEstimate>),
    #[error("anomaly: {0}")]
    Anomaly(String),
}

pub type Result<T> = std::result::Result<T, Error>;
