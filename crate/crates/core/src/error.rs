use thiserror::Error;

/// Errors produced while building networks or computing certificates.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LipError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown activation `{0}`")]
    UnknownActivation(String),

    #[error("unsupported norm pair: {0}")]
    UnsupportedNorm(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("budget exceeded: {required} exceeds the limit of {budget}; {hint}")]
    Budget {
        required: u128,
        budget: u128,
        hint: &'static str,
    },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl LipError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        LipError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = LipError> = std::result::Result<T, E>;
