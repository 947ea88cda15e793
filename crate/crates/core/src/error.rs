use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("linear system is singular beyond tolerance ({context})")]
    SingularSystem { context: String },
    #[error("operator is rank deficient: {context}")]
    RankDeficient { context: String },
    #[error("conjugate value oracle unavailable for {function}")]
    ConjugateUnavailable { function: String },
    #[error("no registered joint subproblem solver for {function} composed with {operator}")]
    NoSubproblemSolver { function: String, operator: String },
    #[error("no registered proximal map for the composition {function} o {operator}")]
    NoProxForComposition { function: String, operator: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical blow-up at iteration {iteration}: {detail}")]
    NumericalBlowup { iteration: usize, detail: String },
    #[error("proximal map of the master function is not affine: {0}")]
    NotAffineProx(String),
    #[error("initialization cannot satisfy the required equalities: {0}")]
    InitUnsatisfiable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error("incompatible combination: {0}")]
    Incompatible(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
