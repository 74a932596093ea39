use std::path::PathBuf;

use thiserror::Error;

/// A single configuration problem. Validation collects every problem it
/// finds rather than stopping at the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    OutOfRange { key: &'static str, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid PER curve: {0}")]
    PerCurve(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration:\n{}", format_list(.0))]
    Config(Vec<ConfigError>),
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
    #[error("simulation failed: {0}")]
    Run(String),
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(vec![e])
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}

fn format_list(errors: &[ConfigError]) -> String {
    errors.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}
