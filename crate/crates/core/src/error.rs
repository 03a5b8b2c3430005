use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "truncation overflow: population {population:.3e} in the top two levels of `{label}` exceeds {threshold:.1e}"
    )]
    TruncationOverflow { label: String, population: f64, threshold: f64 },

    #[error("state leaks outside the qubit subspace of `{label}` (weight {weight:.3e})")]
    Leakage { label: String, weight: f64 },

    #[error("integrator failure at t = {time:.6e} s: {reason}")]
    StepSize { time: f64, reason: String },

    #[error("steady state is not unique: {0}")]
    DegenerateSteadyState(String),

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("measurement branch {0:02b} has zero probability")]
    ZeroProbabilityBranch(u8),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
