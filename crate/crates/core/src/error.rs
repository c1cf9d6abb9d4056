use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The variants map one-to-one onto the CLI exit codes: `Domain` and
/// `Validation` are input problems, `Budget` means an enumeration would exceed
/// its configured limit, `Numeric` means an iterative solver did not converge.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("budget exceeded: {what} needs {required} evaluations, budget is {budget}")]
    Budget {
        what: String,
        required: f64,
        budget: u64,
    },

    #[error("numeric error: {message} (bracket [{lo}, {hi}])")]
    Numeric { message: String, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn budget(what: impl Into<String>, required: f64, budget: u64) -> Self {
        Error::Budget {
            what: what.into(),
            required,
            budget,
        }
    }
}

impl Error {
    /// Prefixes the message with `ctx`.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
            Error::Budget {
                what,
                required,
                budget,
            } => Error::Budget {
                what: format!("{ctx}: {what}"),
                required,
                budget,
            },
            Error::Numeric { message, lo, hi } => Error::Numeric {
                message: format!("{ctx}: {message}"),
                lo,
                hi,
            },
            Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
            Error::Parse(m) => Error::Parse(format!("{ctx}: {m}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
