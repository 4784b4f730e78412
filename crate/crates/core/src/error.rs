use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate cube: half-side {0} must exceed 3")]
    DegenerateCube(i64),

    #[error("index set must be nonempty")]
    EmptyIndexSet,

    #[error("cube is fully interactive and admits no partition")]
    FullyInteractive,

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("energy {energy} lies in the spectrum (distance {distance:e})")]
    Resonant { energy: f64, distance: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("region not contained: {0}")]
    NotContained(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integer overflow: {0}")]
    Overflow(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Resonant { .. } | Error::Eigensolver(_))
    }
}
