use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid cutoff: {0}")]
    Cutoff(String),
    #[error("basis kind {kind} requires a three-dimensional domain, got dim = {dim}")]
    KindNeedsDim3 { kind: String, dim: usize },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("sigma = {sigma} is outside the admissible range {range} for family {family}")]
    SigmaRange { sigma: f64, family: String, range: &'static str },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unsupported boundary data: {0}")]
    UnsupportedBoundary(String),
    #[error("initial data incompatible with boundary data: trace mismatch {mismatch:e} exceeds {tol:e}")]
    Compatibility { mismatch: f64, tol: f64 },
    #[error("time step {dt} violates the explicit stability guard (limit {limit})")]
    StepSize { dt: f64, limit: f64 },
    #[error("solution blew up at t = {time} (coefficient magnitude {magnitude:e})")]
    BlowUp { time: f64, magnitude: f64 },
    #[error("linearization point has X-norm {norm} above the admissible radius {radius}")]
    RadiusViolation { norm: f64, radius: f64 },
    #[error("newton iteration diverged: residuals {0:?}")]
    Divergence(Vec<f64>),
    #[error("trajectory error: {0}")]
    Trajectory(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
