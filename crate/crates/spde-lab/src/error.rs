use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight exponent n = {n} must exceed the dimension d = {d}")]
    WeightExponentTooSmall { n: u32, d: usize },

    #[error("node count mismatch: field has {field} samples, rule has {rule} nodes")]
    NodeCountMismatch { field: usize, rule: usize },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("time grid must be strictly increasing")]
    NonMonotoneGrid,

    #[error("two-sided grid must contain t = 0")]
    MissingOrigin,

    #[error("ensemble size {0} too small for a meaningful standard error")]
    EnsembleTooSmall(usize),

    #[error("state length {state} does not match backend length {backend}")]
    BackendMismatch { state: usize, backend: usize },

    #[error("non-finite state at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },

    #[error("iteration failed to contract: measured ratio {ratio} at sweep {sweep}")]
    NonContracting { ratio: f64, sweep: usize },

    #[error("smallness conditions violated: {0}")]
    IneligibleCertificate(String),

    #[error("grid too coarse for semigroup time {t}: multiplier tail {tail} above {limit}")]
    GridTooCoarse { t: f64, tail: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
