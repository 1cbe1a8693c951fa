use std::path::PathBuf;

use robustgd_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// Process exit status: 1 configuration, 2 numerical, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(CoreError::NumericalFailure(_))
            | HarnessError::Core(CoreError::DegenerateCoordinate { .. }) => 2,
            HarnessError::Verification(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv { path: path.into(), source }
    }
}

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::HarnessError::Config(format!($($arg)*)) };
}
pub(crate) use config_err;
