use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix {0} is not symmetric (asymmetry {1:e})")]
    NotSymmetric(&'static str, f64),
    #[error("matrix {0} is not positive semi-definite (min eigenvalue {1:e})")]
    NotPsd(&'static str, f64),
    #[error("matrix {0} is not positive definite (min eigenvalue {1:e})")]
    NotPd(&'static str, f64),
    #[error("bad horizon: {0}")]
    BadHorizon(String),
    #[error("bad correlation window: {0}")]
    BadEps(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("grid too coarse: eps = {eps} rounds to zero lag steps at dt = {dt}")]
    GridTooCoarse { eps: f64, dt: f64 },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("covariance kernel is not positive semi-definite (pivot {0:e})")]
    KernelNotPsd(f64),
    #[error("a cross-covariance kernel cannot be factored on its own")]
    UnsupportedCross,
    #[error("delay schedule out of range: {0}")]
    ScheduleOutOfRange(String),
    #[error("Riccati solution blew up at t = {t} (norm {norm:e})")]
    BlowUp { t: f64, norm: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("missing table: {0}")]
    MissingTables(&'static str),
    #[error("relaxing functions fail Gram reproduction (error {0:e})")]
    FactorizationMismatch(f64),
    #[error("unsupported experiment: {0}")]
    UnsupportedExperiment(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("need at least two paths for a standard error, got {0}")]
    TooFewPaths(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
