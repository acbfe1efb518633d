use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("generator `{generator}` is not a symmetry of the mesh: {reason}")]
    IncompatibleGroup { generator: String, reason: String },

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("alpha = {alpha} is not below the working eigenvalue {lambda}")]
    AlphaNotAdmissible { alpha: f64, lambda: f64 },

    #[error("negative 1,alpha quadratic form {value:e}: alpha is not below the first invariant eigenvalue or the input is not projected")]
    NegativeNorm { value: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("radius {radius} exceeds the admissible bound {bound} for the orbit balls")]
    OverlappingBalls { radius: f64, bound: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by user input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::Schema(_)
            | Error::Io(_)
            | Error::Mesh(_)
            | Error::IncompatibleGroup { .. }
            | Error::Unsupported(_)
            | Error::AlphaNotAdmissible { .. }
            | Error::OverlappingBalls { .. } => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
