use std::path::PathBuf;

/// Errors surfaced by the harness and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration or input file is unusable; `location` names the line
    /// and/or field.
    #[error("{path}: {location}: {message}")]
    Config {
        path: String,
        location: String,
        message: String,
    },
    #[error("invalid input: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mledr_core::Error),
    #[error("cell n = {n} aborted after {failures} failed replications; first failure at replication {rep}: {source}")]
    CellAborted {
        n: u64,
        failures: u64,
        rep: u64,
        source: mledr_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    /// Process exit code: 2 for bad configuration or input, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
