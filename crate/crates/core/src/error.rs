use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} is not positive semi-definite")]
    NotPsd { name: &'static str },

    #[error("innovation covariance is singular at step {step}")]
    SingularInnovation { step: usize },

    #[error("predicted covariance is singular at step {step}")]
    SingularPredicted { step: usize },

    #[error("singular M-step normal matrix")]
    SingularNormalMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("random matrix draw was all zeros after {0} attempts")]
    DegenerateDraw(usize),

    #[error("initial transition matrix gives a non-finite log-likelihood")]
    BadInitialization,

    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Data {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("{path}: no column named `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
