use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum FbetaError {
    /// A distribution, dataset or sample violates its structural invariants.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A quantity is undefined for the given input (e.g. P(Y=1) = 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A scalar argument is out of its admissible range.
    #[error("argument error: {0}")]
    Argument(String),

    /// A caller-supplied object does not honor the contract it was passed under.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training data carries no positive label; the threshold equation is vacuous.
    #[error("training sample is degenerate: {0}")]
    TrainingDegenerate(String),

    /// A synthetic family could not be built with the requested parameters.
    #[error("construction error: {0}")]
    Construction(String),

    /// A numerical routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A brute-force routine was asked for more work than it allows.
    #[error("size error: {0}")]
    Size(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FbetaError {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            FbetaError::Invalid(_) => "invalid",
            FbetaError::Domain(_) => "domain",
            FbetaError::Argument(_) => "argument",
            FbetaError::Contract(_) => "contract",
            FbetaError::TrainingDegenerate(_) => "training_degenerate",
            FbetaError::Construction(_) => "construction",
            FbetaError::Numeric(_) => "numeric",
            FbetaError::Size(_) => "size",
            FbetaError::Io(_) => "io",
            FbetaError::Csv(_) => "csv",
            FbetaError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, FbetaError>;
