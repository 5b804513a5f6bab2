//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejection sampling ran out of candidate draws before satisfying the
    /// placement constraints. Usually means the constraint combination is
    /// infeasible for the requested cell count.
    #[error("node placement failed after {attempts} candidate draws: {reason}")]
    PlacementFailed { attempts: usize, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A cooperation exchange received a malformed set of Q-rows
    /// (missing sender, duplicate sender, or mismatched subcarrier/length).
    #[error("cooperation bus fault: {0}")]
    CooperationBusFault(String),

    #[error("empty measurement window")]
    EmptyWindow,

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
