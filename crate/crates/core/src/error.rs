use thiserror::Error;

/// A single failed check when validating a projection family.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FamilyFailure {
    NotSquare,
    DimensionMismatch,
    SingularL,
    QNotSymmetric,
    QNotPositiveDefinite,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid projection family: {0:?}")]
    InvalidFamily(Vec<FamilyFailure>),

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid generator parameters: {}", .0.join("; "))]
    InvalidGenerator(Vec<String>),

    #[error("need at least 4 dyadic scales in the fit range, found {found}")]
    TooFewScales { found: usize },

    #[error("ball-mass bound not applicable: energy {energy} exceeds R = {bound}")]
    HypothesisViolated { energy: f64, bound: f64 },

    #[error("no parameter samples given")]
    EmptySamples,

    #[error("delta {delta} is below the resolution floor {delta0}")]
    BelowResolution { delta: f64, delta0: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
