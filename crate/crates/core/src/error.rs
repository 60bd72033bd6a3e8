use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("singular fluctuation system at xi = {xi}: condition number {cond:.3e}")]
    SingularSystem { xi: f64, cond: f64 },

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("non-physical DGCZ value V = {0:.6e}")]
    NonPhysical(f64),

    #[error("outside analytic domain: {0}")]
    Domain(String),

    #[error("optimizer: no seed evaluation succeeded")]
    NoImprovement,

    #[error("sweep failed at {failed} of {total} points; first failure: {first}")]
    SweepFailed {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
