use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("hyperparameter {name} must be strictly positive and finite, got {value}")]
    NonPositiveHyper { name: &'static str, value: f64 },

    #[error("variance {name}[{index}] must be strictly positive, got {value}")]
    NonPositiveVariance {
        name: &'static str,
        index: usize,
        value: f64,
    },

    #[error("linear system is not symmetric positive definite to working precision")]
    SingularSystem,

    #[error("operation requires the {expected} model")]
    ModelMismatch { expected: &'static str },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("density is singular at {0}")]
    Singular(f64),

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimated error {error:e})")]
    QuadratureFailure { tolerance: f64, error: f64 },

    #[error("invalid generator spec: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
