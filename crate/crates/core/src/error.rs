use thiserror::Error;

/// Errors raised by measure construction, evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate atom at point {0:?}")]
    DuplicatePoint(Vec<i64>),
    #[error("atom at {0:?} has a non-positive weight")]
    NonPositiveWeight(Vec<i64>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("measure is not normalized: log total mass is {excess}")]
    NotNormalized { excess: f64 },
    #[error("operation needs a finitely supported measure")]
    UnsupportedStream,
    #[error("only character mixtures can be integrated against an infinitely supported measure")]
    UnsupportedFunctionForStream,
    #[error("Laplace transform diverges at the requested point")]
    Diverged,
    #[error("Laplace transform evaluation was inconclusive after {terms_used} shells")]
    Inconclusive { terms_used: u64 },
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("function is not monotone along the requested ray")]
    NotMonotone,
    #[error("start point is not on the level set (|log phi| = {residual})")]
    StartNotOnSet { residual: f64 },
    #[error("sequence does not converge to the candidate")]
    SequenceNotConvergent,
    #[error("point lies outside the cube")]
    OutsideCube,
    #[error("sequence member {index} is not a harmonic character (|phi - 1| = {residual})")]
    NonHarmonicSequenceMember { index: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
