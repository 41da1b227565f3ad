use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("numeric divergence in {stage}: {detail}")]
    Divergence { stage: String, detail: String },

    #[error("latency budget infeasible: T_max = {t_max} s but the endpoint keyframes alone need {min_t_exe} s")]
    Infeasible { min_t_exe: f64, t_max: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Infeasible { .. } => 3,
            Error::NonFinite { .. } | Error::Divergence { .. } => 4,
            _ => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
