use thiserror::Error;

/// Errors raised anywhere in the simulation and detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input arrays have the wrong length or shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// A parameter combination that cannot be simulated.
    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite values or singular systems.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Index outside the valid range.
    #[error("index error: {0}")]
    Index(String),

    /// A detector was asked for a head or shift it does not hold.
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("training diverged at epoch {epoch} (lr = {lr}): {reason}")]
    TrainingDiverged { epoch: usize, lr: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
