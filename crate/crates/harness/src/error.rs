use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("planted phrases need {needed} contexts but only {available} are available")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("nothing to write: {0}")]
    EmptyInput(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: sjdpv_core::Error,
    },
    #[error(transparent)]
    Engine(#[from] sjdpv_core::Error),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) trait PathContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> PathContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| HarnessError::Io {
            path: path.into(),
            source,
        })
    }
}

impl<T> PathContext<T> for std::result::Result<T, sjdpv_core::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| HarnessError::Core {
            path: path.into(),
            source,
        })
    }
}

impl<T> PathContext<T> for std::result::Result<T, csv::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| HarnessError::Csv {
            path: path.into(),
            source,
        })
    }
}

impl<T> PathContext<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| HarnessError::Json {
            path: path.into(),
            source,
        })
    }
}
