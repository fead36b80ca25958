use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The config document could not be parsed.
    #[error("config schema error{}: {message}", fmt_line(*.line))]
    Schema {
        line: Option<usize>,
        message: String,
    },

    /// A parsed value violates an invariant of the named parameter group.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// An argument lies outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed genome, trace table or similar.
    #[error("format error: {0}")]
    Format(String),

    #[error(
        "unknown scheme {0:?} (expected one of M-IRS-NOMA, S-IRS-NOMA, No-IRS-NOMA, M-IRS-OMA)"
    )]
    UnknownScheme(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bad configuration document.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Schema { .. } | Error::Validation { .. })
    }
}
