use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 8")]
    InvalidGridSize(usize),

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("grid mismatch: operand on {left} points, operator on {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("symbol violates realness at frequency {k}: p(-k) != conj(p(k))")]
    RealnessViolation { k: i64 },

    #[error("symbol order bound is not finite")]
    UnboundedSymbol,

    #[error("dense matrix requested for N = {n}, limit is {limit}")]
    DenseTooLarge { n: usize, limit: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unsupported Lyapunov function `{0}`")]
    UnsupportedLyapunov(String),

    #[error("empty sample cloud")]
    EmptyCloud,

    #[error("cloud dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: String },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
