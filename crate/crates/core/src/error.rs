use thiserror::Error;

/// Errors raised by the channel models, optimizers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum McvdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("passive receiver validity condition violated: r/(r+d) = {ratio:.4} >= 0.15")]
    Validity { ratio: f64 },

    #[error("receiver kind does not match {0}")]
    KindMismatch(&'static str),

    #[error("ISI length {0} is too large for pattern enumeration (max 20)")]
    EnumerationTooLarge(usize),

    #[error("empty search grid: {0}")]
    EmptyGrid(&'static str),

    #[error("closed-form approximation broke down: {reason}")]
    ApproximationBreakdown { reason: String, intermediates: Vec<(&'static str, f64)> },

    #[error("degenerate W ratio: p at sample {0} for tap 1 is zero")]
    DegenerateW(i64),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("I/O error: {0}")]
    Io(String),
}

impl McvdError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            McvdError::Parse(_) | McvdError::InvalidConfig(_) | McvdError::Validity { .. } => 2,
            McvdError::Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for McvdError {
    fn from(e: std::io::Error) -> Self {
        McvdError::Io(e.to_string())
    }
}

pub type Result<T, E = McvdError> = std::result::Result<T, E>;
