use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mollifier width {eps} is below the grid spacing {dx}")]
    KernelUnderresolved { eps: f64, dx: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("particle left the periodic box safety shell at step {step} (|x| = {radius})")]
    BlowUp { step: usize, radius: f64 },

    #[error("inverse flow round-trip residual {residual:e} exceeds tolerance {tol:e}")]
    InverseToleranceExceeded { residual: f64, tol: f64 },

    #[error("{failed} of {total} nodes failed the inverse-flow certificate")]
    TooManyInverseFailures { failed: usize, total: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("time step rejected after {halvings} halvings at t = {t}")]
    StepRejected { t: f64, halvings: u32 },

    #[error("tolerance exceeded: {metric} = {value:e} > {tol:e}")]
    TolExceeded { metric: String, value: f64, tol: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
