use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("degenerate coordinate {coordinate}: zero variance")]
    DegenerateCoordinate { coordinate: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! numerical {
    ($($arg:tt)*) => {
        $crate::error::Error::NumericalFailure(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use numerical;
