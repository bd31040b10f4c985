use thiserror::Error;

use crate::gf2::Gf2Error;

#[derive(Debug, Error)]
pub enum PncError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("no non-singular global mapping matrix among the candidates")]
    SelectionFailure,
    #[error("incompatible candidate store: {0}")]
    IncompatibleStore(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PncError {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        PncError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        PncError::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, PncError>;
