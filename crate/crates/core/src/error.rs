use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data breaks a structural or numeric invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// No schedule meets every deadline (the EDF check fails).
    #[error("instance is infeasible: earliest-deadline-first order misses a deadline")]
    Infeasible,

    /// A caller-supplied parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("generation failed for family {family} with seed {seed}: {msg}")]
    Generation { family: u8, seed: u64, msg: String },

    /// Something that should be impossible happened, e.g. a heuristic beat a
    /// proven optimum.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
