use thiserror::Error;

/// Errors raised by the analysis, parametrization and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank {r} out of range 1..={n}")]
    InvalidRank { r: usize, n: usize },

    #[error("singular pencil: det(zE - A) vanishes at every sample point")]
    SingularPencil,

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
