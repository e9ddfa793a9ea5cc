use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solvers and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at r = {r}")]
    StepUnderflow { r: f64 },

    #[error("solution overflow at r = {r}")]
    Overflow { r: f64 },

    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },

    #[error("invalid root bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("could not bracket the ground-state slope at lambda = {lambda}: {reason}")]
    BracketFailure { lambda: f64, reason: String },

    #[error("shooting map not monotone near s = {s}")]
    NonMonotoneShooting { s: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("profile invariant violated: {0}")]
    ProfileInvariant(String),

    #[error("continuation stalled; last converged lambda = {last_good}")]
    ContinuationStalled { last_good: f64 },

    #[error("degenerate linearization at lambda = {lambda}")]
    DegenerateLinearization { lambda: f64 },

    #[error("curve too short to classify: {0}")]
    CurveTooShort(String),

    #[error("insufficient lambda range: {0}")]
    InsufficientRange(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
