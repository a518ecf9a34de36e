use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything a library operation can reject. Mathematical *refutations*
/// (NOT_PSD verdicts, failed consistency checks) are not errors; they are
/// ordinary return values. Errors mean the question itself was ill-posed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient degree: {0}")]
    DegreeInsufficient(String),
    #[error("scalar mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("sequence is not finitely supported: {0}")]
    NotFinitelySupported(String),
    #[error("negative weight: {0}")]
    NegativeWeight(String),
    #[error("nonpositive entry: {0}")]
    NonpositiveEntry(String),
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("measure carries mass at the origin: {0}")]
    MassAtOrigin(String),
    #[error("axis out of range: {0}")]
    AxisOutOfRange(String),
    #[error("numeric overflow: {0}")]
    Overflow(String),
    #[error("sample outside cone: {0}")]
    OutsideCone(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
