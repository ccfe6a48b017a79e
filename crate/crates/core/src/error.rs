use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("noise standard deviation must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probabilities must be strictly positive and sum to 1")]
    InvalidProbabilities,
    #[error("mini-batch is empty")]
    EmptyBatch,
    #[error("operation needs a one-hot basis distribution")]
    UnsupportedDistribution,
    #[error("step sizes out of domain: {0}")]
    StepDomain(&'static str),
    #[error("({a}, {b}) is outside the open unit square")]
    PairDomain { a: f64, b: f64 },
    #[error("iteration matrix has a repeated eigenvalue")]
    DegenerateSpectrum,
    #[error("imaginary residue {0:e} exceeds tolerance")]
    ImaginaryResidue(f64),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
