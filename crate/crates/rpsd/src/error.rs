use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// The selection law leaves some subspace with zero inclusion probability.
    #[error("selection law is not admissible: {0}")]
    Admissibility(String),

    /// An eigenvalue of the averaged projection fell below the floor, which
    /// signals an effectively inadmissible sampling.
    #[error(
        "averaged projection is near-singular: eigenvalue {eigenvalue:.3e} below floor {floor:.1e}"
    )]
    NearSingular { eigenvalue: f64, floor: f64 },

    #[error("exact enumeration needs {outcomes} outcomes, above the limit of {limit}")]
    EnumerationTooLarge { outcomes: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Requested a strongly convex rate while mu = 0.
    #[error("rate is undefined: the smooth part is not strongly convex")]
    UndefinedRate,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
