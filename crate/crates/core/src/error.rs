use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two independent evaluations of the same quantity disagree.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// The data admit no solution of the requested kind.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Boundary data violate the divergence-theorem compatibility condition.
    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    /// An iterative solver stopped without reaching its tolerance.
    #[error("no convergence: {message}")]
    NonConvergence { message: String, trace: Vec<f64> },

    /// A mesh lost one of its structural invariants during evolution.
    #[error("mesh degeneration: {0}")]
    MeshDegeneration(String),

    /// A mesh violates an invariant on construction or import.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Not enough samples for a fit or measurement.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Scenario configuration could not be parsed or validated.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn no_solution(msg: impl Into<String>) -> Self {
        Error::NoSolution(msg.into())
    }
}
