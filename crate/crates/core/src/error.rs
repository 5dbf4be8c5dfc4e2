use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("Gauss curvature {value:e} is not positive at direction {direction:?}")]
    CurvatureNotPositive { value: f64, direction: Vec<f64> },

    #[error("density evaluated to {0:e}; densities must be strictly positive")]
    NonPositiveDensity(f64),

    #[error("quadrature error estimate {relative_error:e} (relative) exceeds the tolerance")]
    QuadratureFailure { relative_error: f64 },

    #[error("acceptance weight {weight:e} exceeded the envelope bound {bound:e}")]
    EnvelopeExceeded { weight: f64, bound: f64 },

    #[error("degenerate point set: {0}")]
    DegenerateInput(String),

    #[error("polytope vertex {index} is off the body boundary (relative offset {offset:e})")]
    VertexOffBoundary { index: usize, offset: f64 },

    #[error("N = {n_points} is too small: shrink factor {c} is not below 1/2")]
    NTooSmall { n_points: usize, c: f64 },

    #[error("p = {0} is not an admissible affine surface area exponent")]
    InvalidExponent(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
