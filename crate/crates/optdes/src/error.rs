use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the admissible domain (point outside the hypercube,
    /// dispersion parameters outside the model cone, bad dimensions).
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be inverted is singular (or numerically so).
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A design value violates a structural invariant (weights, levels, orbits).
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    /// An iterative solver exhausted its budget before reaching tolerance.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// The requested parameters fall in a region with no known closed-form design.
    #[error("no closed-form design known for this parameter region: {0}")]
    Uncovered(String),

    /// A state the guard analysis says is unreachable.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
