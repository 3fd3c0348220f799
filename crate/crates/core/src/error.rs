use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spline: {0}")]
    InvalidSpline(String),

    #[error("inconsistent samples: x = {x} has values {y0} and {y1}")]
    InconsistentSamples { x: String, y0: f64, y1: f64 },

    #[error("no samples given")]
    EmptySamples,

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("not 1-Lipschitz: Lipschitz constant {0}")]
    NotOneLipschitz(f64),

    #[error("coincident points")]
    CoincidentPoints,

    #[error("invalid norm index {0}; expected p >= 1")]
    InvalidNorm(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid network: {0}")]
    InvalidNet(String),

    #[error("rank deficient")]
    RankDeficient,

    #[error("net too large for enumeration: {0}")]
    EnumerationBudget(String),

    #[error("depth budget exceeded: {0}")]
    DepthBudget(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),
}
