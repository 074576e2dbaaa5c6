use thiserror::Error;

/// Error surface shared by all modules.
///
/// `Structural` covers malformed values (wrong arity, unreduced residues,
/// mismatched group specs); `Domain` covers arguments outside an operation's
/// contract; `Capacity` is returned before any enumeration whose size would
/// exceed the configured guard; `Numerical` flags a failed internal
/// consistency check in floating-point work.
#[derive(Debug, Error)]
pub enum QocError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {what} needs {needed}, guard is {guard}")]
    Capacity {
        what: String,
        needed: u128,
        guard: u128,
    },
    #[error("numerical consistency error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, QocError>;

impl QocError {
    pub fn structural(msg: impl Into<String>) -> Self {
        QocError::Structural(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        QocError::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        QocError::Numerical(msg.into())
    }
}
