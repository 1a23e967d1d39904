use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the formulas hold.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("spectral density is singular at frequency 0 for d > 0")]
    Singularity,

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The Toeplitz matrix built from the autocovariances is not positive
    /// definite; `order` is the first order at which the recursion broke down.
    #[error("autocovariance sequence is not positive definite (failed at order {order})")]
    NotPositiveDefinite { order: usize },

    #[error("series tail did not reach the requested accuracy: achieved {achieved:.3e}, target {target:.3e}")]
    Accuracy { achieved: f64, target: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("internal consistency check failed: {what} (relative discrepancy {discrepancy:.3e})")]
    InternalConsistency { what: &'static str, discrepancy: f64 },

    #[error("at least {min} replicates are required for a slope estimate, got {reps}")]
    StatisticalPower { reps: usize, min: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
