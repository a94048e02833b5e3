use thiserror::Error;

/// Errors raised by the library.
///
/// `Refusal` marks a well-formed request whose preconditions cannot be met
/// (unbounded parameters, lag that does not fit, no admissible `l_n`). Callers
/// that need to tell "cannot" apart from "malformed" match on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} {value} out of range (allowed {allowed})")]
    Range {
        what: &'static str,
        value: String,
        allowed: String,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("materialization cap exceeded: need {required} symbols, cap is {cap}")]
    CapExceeded { required: String, cap: u64 },
    #[error("value undetermined at truncation depth {depth}; a deeper point is required")]
    Undetermined { depth: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl ToString, allowed: impl ToString) -> Self {
        Error::Range {
            what,
            value: value.to_string(),
            allowed: allowed.to_string(),
        }
    }

    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Refusal(_) | Error::CapExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
