use std::fmt;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input is valid but larger than a brute-force routine accepts.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A text or JSON document could not be parsed.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// An enumeration ran out of its time budget.
    #[error("budget exceeded after {partial} solutions (count is not exact)")]
    BudgetExceeded { partial: u64 },

    /// A molecule failed structural or symmetry constraints.
    #[error("infeasible molecule: {}", DisplayList(.0))]
    Infeasible(Vec<String>),

    /// The formulation cannot be built from the given model.
    #[error("build error: {0}")]
    Build(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}

struct DisplayList<'a>(&'a [String]);

impl fmt::Display for DisplayList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(", "))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
