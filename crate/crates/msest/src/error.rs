//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration diverged at ic {ic}, path {path}, step {step}")]
    IntegrationDiverged { ic: usize, path: usize, step: usize },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("moment table does not track exponent {0}")]
    MissingExponent(u32),

    #[error("unknown model '{name}' (available: {available})")]
    UnknownModel { name: String, available: String },

    #[error("no closed-form effective coefficients for model '{0}'")]
    TruthUnavailable(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
