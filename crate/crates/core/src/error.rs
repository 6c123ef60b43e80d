use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parameter `{name}` has shape {found:?}, expected {expected:?}")]
    ParameterShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("unexpected parameter `{0}`")]
    UnexpectedParameter(String),

    #[error("class id {id} out of range for {classes} classes")]
    ClassOutOfRange { id: u8, classes: usize },

    #[error("no scorable classes")]
    NoScorableClasses,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}

macro_rules! mismatch {
    ($($arg:tt)*) => {
        $crate::error::Error::ShapeMismatch(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use mismatch;
