use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular matrix (determinant {determinant:e})")]
    SingularMatrix { determinant: f64 },

    #[error("covariance estimate is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("rejection acceptance rate {rate:.3e} below floor {floor:.3e}; body too thin for box rejection")]
    AcceptanceTooLow { rate: f64, floor: f64 },

    #[error("lattice enumeration cap {cap} exceeded (estimated {estimate:.3e} points)")]
    CapExceeded { cap: u64, estimate: f64 },

    #[error("empty stencil for t = {t} at grid spacing h = {h}")]
    EmptyStencil { t: f64, h: f64 },

    #[error("operation requires {required} boundary mode")]
    BoundaryMode { required: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("missing series {requested:?}; available: {available:?}")]
    MissingSeries {
        requested: String,
        available: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
