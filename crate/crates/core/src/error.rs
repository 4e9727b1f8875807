use thiserror::Error;

/// Errors produced by every gapscope operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size limit exceeded: n = {n} is larger than the configured maximum {max} (set GAPSCOPE_MAX_N to override)")]
    SizeLimit { n: usize, max: usize },

    #[error("random regular sampling failed after {attempts} attempts")]
    SamplingFailure { attempts: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("no sample reached lambda2 < {threshold} in {attempts} attempts (last lambda2 = {lambda2})")]
    WeakExpansion { lambda2: f64, threshold: f64, attempts: usize },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("matrix has no spectral gap (lambda2 = {0})")]
    DisconnectedMatrix(f64),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("edge average vanishes while the all-pairs average does not")]
    DisconnectedSupport,

    #[error("bound is infinite: {0}")]
    InfiniteBound(String),

    #[error("metric must be normalized: {0}")]
    Normalization(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
