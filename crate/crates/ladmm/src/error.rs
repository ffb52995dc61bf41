use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    InvalidSpec { what: &'static str, why: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Snet proximal formula requires (a-1)*(eta+lambda2) > 1, got {0}")]
    SnetConditionViolated(f64),

    #[error("Mnet proximal formula requires a*(eta+lambda2) > 1, got {0}")]
    MnetConditionViolated(f64),

    #[error("eta = {eta} does not dominate the spectral bound {bound} of mu*X'X")]
    EtaBelowSpectralBound { eta: f64, bound: f64 },

    #[error("nonfinite value encountered at iteration {0}; aborting")]
    Diverged(usize),

    #[error("a worker round did not complete: {0}")]
    WorkerFailure(String),

    #[error("operation not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("tuning failed: {0}")]
    TuneFailed(String),

    #[error("equivalence audit requires a pinned eta in the solver config")]
    AuditRequiresPinnedEta,

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
