use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("support site {site:?} (offset {offset:?}) lies outside the volume")]
    SupportOutOfVolume { site: Vec<i64>, offset: Vec<i64> },

    #[error("no translate of the observable fits inside the volume {extents:?}")]
    NoAdmissibleTranslate { extents: Vec<usize> },

    #[error("Hilbert-space dimension {n}^{sites} exceeds the cap {cap}")]
    DimensionCapExceeded { n: usize, sites: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("polynomial is not a symmetric quantization ({0})")]
    NonSymmetricPolynomial(String),

    #[error("quantizations differ classically: |g1 - g2| = {deviation:e} at ({x}, {y})")]
    DifferentClassicalPolynomial { x: f64, y: f64, deviation: f64 },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("eigendecomposition failed to converge")]
    ConvergenceFailure,

    #[error("model is not permutation invariant: {0}")]
    NotPermutationInvariant(String),

    #[error("sector fast path supports only spin-1/2 generators (site dimension {0})")]
    GeneratorSetUnsupported(usize),

    #[error("extrapolation needs at least {needed} increasing volumes, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("observable {0} is not supported on a single site")]
    NonOneSiteObservable(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, context: impl Into<String>) -> Self {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
