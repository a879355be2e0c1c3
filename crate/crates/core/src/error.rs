use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("kernel profile is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("discretized operator is not positive semidefinite: min eigenvalue {min_eig:.3e}, max {max_eig:.3e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("degenerate symbol term: {0}")]
    DegenerateTerm(String),

    #[error("point outside the domain: {0}")]
    OutOfDomain(String),

    #[error("rank {rank} out of range (available: {available})")]
    RankOutOfRange { rank: usize, available: usize },

    #[error("numerical routine failed to converge: {0}")]
    ConvergenceError(String),

    #[error("no closed form or grid path for transform: {0}")]
    TransformUnavailable(String),

    #[error("not a probability density: {0}")]
    NotADensity(String),

    #[error("witness undefined: distributions are indistinguishable under this kernel")]
    DegenerateWitness,

    #[error("local moment undefined at t = {0:?}: conditioning mass underflows")]
    UnsupportedPoint(Vec<f64>),

    #[error("requested {requested} model samples but only {available} base-noise draws exist")]
    NoiseExhausted { requested: usize, available: usize },

    #[error("invalid instance spec: {0}")]
    SpecError(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
