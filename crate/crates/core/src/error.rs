use thiserror::Error;

/// Errors raised by the laboratory. Every variant maps onto a stable exit
/// code for the CLI and the C interface (see [`Error::code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("point too close to the boundary: gap {gap:e} < required {required:e}")]
    NearBoundary { gap: f64, required: f64 },

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("empty metric ball of radius {radius}")]
    EmptyBall { radius: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature inconsistency: {0}")]
    QuadratureInconsistency(String),

    #[error("covering violated at node {node}")]
    CoveringViolated { node: usize },

    #[error("map does not land in the boundary (residual {residual:e})")]
    NotOnBoundary { residual: f64 },

    #[error("symbol parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown command: {0}")]
    UnknownCommand(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable numeric code; 0 is reserved for success.
    pub fn code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. } => 2,
            Error::OutsideDomain => 3,
            Error::InvalidParameter(_) => 4,
            Error::GridTooCoarse(_) => 5,
            Error::NotPositiveDefinite { .. } => 6,
            Error::NearBoundary { .. } => 7,
            Error::Disconnected(_) => 8,
            Error::EmptyBall { .. } => 9,
            Error::Unsupported(_) => 10,
            Error::QuadratureInconsistency(_) => 11,
            Error::CoveringViolated { .. } => 12,
            Error::NotOnBoundary { .. } => 13,
            Error::Parse { .. } => 14,
            Error::Config(_) => 15,
            Error::UnknownCommand(_) => 16,
            Error::Io(_) => 17,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
