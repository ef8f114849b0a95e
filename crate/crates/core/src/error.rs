use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("special function domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("GMRES did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("evaluation point {0:?} lies outside the physical box")]
    OutsideBox(Vec<f64>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
