use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter record or configuration breaks one of its invariants.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    /// Argument outside the domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    /// The requested quantity does not exist for these parameters
    /// (e.g. no stationary measure, undefined threshold).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Integration or search failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed configuration; `line` is 1-based when the fault has a location.
    #[error("config{}: {msg}", line_suffix(.line))]
    Config { line: Option<usize>, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: &Option<usize>) -> String {
    line.map(|l| format!(" line {l}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Config { .. }
            | Error::Io { .. }
            | Error::Unsupported(_) => 2,
            Error::Domain(_) | Error::Pole(_) | Error::Numerical(_) => 3,
        }
    }
}
