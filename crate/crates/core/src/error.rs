use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("simulation diverged at t = {t} s: `{field}` is not finite")]
    Divergence { t: f64, field: &'static str },

    #[error("uncontrollable configuration: actuator ineffectiveness k2 = 1 removes the actuator")]
    Uncontrollable,

    #[error("singular input gain b = {0}")]
    SingularGain(f64),

    #[error("empty input series")]
    EmptyInput,

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("insufficient signal: series has no spectral peak above the noise floor")]
    InsufficientSignal,

    #[error("suppression undefined: free-vibration amplitude is zero")]
    UndefinedSuppression,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("time column not strictly increasing at line {line}")]
    NonMonotonicTime { line: usize },

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("vector field evaluation failed at probe point [{}, {}]", point[0], point[1])]
    Evaluation { point: [f64; 2] },

    #[error("configs disagree on shared section `{field}`")]
    Inconsistent { field: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Uncontrollable
            | Error::SingularGain(_)
            | Error::Inconsistent { .. }
            | Error::Parse { .. }
            | Error::NonMonotonicTime { .. }
            | Error::EmptyFile
            | Error::Json(_) => 2,
            Error::Divergence { .. } => 3,
            _ => 1,
        }
    }
}
