use thiserror::Error;

/// Errors raised by the simulator, the closed forms and the experiment driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function (negative power,
    /// non-positive variance, E1 at x <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates an invariant. `key` names the offending
    /// setting when one can be identified.
    #[error("config error{}: {message}", key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default())]
    Config { key: Option<String>, message: String },

    /// A value does not fit the integer type it is computed in.
    #[error("overflow: {0}")]
    Overflow(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Self {
        Error::Config { key: Some(key.to_string()), message: msg.into() }
    }

    pub(crate) fn config_msg(msg: impl Into<String>) -> Self {
        Error::Config { key: None, message: msg.into() }
    }

    /// Process exit status for the CLI: 2 for configuration and I/O
    /// problems, 3 for numerical-domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 2,
            Error::Domain(_) | Error::Overflow(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
