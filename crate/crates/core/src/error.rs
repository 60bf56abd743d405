use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a numeric operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A configuration value failed validation. `field` names the offending key.
    #[error("invalid configuration `{field}`: {detail}")]
    Config { field: String, detail: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    /// A sweep run failed; carries the axis value that produced the failure.
    #[error("sweep run failed at {axis} = {value}: {source}")]
    Sweep {
        axis: String,
        value: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }

    pub(crate) fn config(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config { field: field.into(), detail: detail.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), detail: detail.into() }
    }

    /// True for errors raised while validating inputs, before any work is done.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::Domain { .. } | Error::Parse { .. } => true,
            Error::Sweep { source, .. } => source.is_config(),
            Error::Io { .. } => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
