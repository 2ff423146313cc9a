use thiserror::Error;

#[derive(Debug, Error)]
pub enum FracError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid boundary set: {0}")]
    InvalidBoundarySet(String),
    #[error("point {0:?} is not inside the domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("face-adjacency graph of the Whitney cubes is disconnected ({} components)", .components.len())]
    DisconnectedCubes { components: Vec<Vec<usize>> },
    #[error("unknown tree node {0}")]
    UnknownNode(usize),
    #[error("grid is incompatible with the covering: {0}")]
    IncompatibleGrid(String),
    #[error("function does not have zero mean: |mean| = {mean:e}, tolerance {tolerance:e}")]
    NonZeroMean { mean: f64, tolerance: f64 },
    #[error("gagliardo form is singular beyond the constants ({} null vectors)", .null_vectors.len())]
    SingularForm { null_vectors: Vec<Vec<f64>> },
    #[error("eigen-iteration did not converge: residual {0:e}")]
    NoConvergence(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FracError>;
