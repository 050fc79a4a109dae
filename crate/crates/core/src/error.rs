use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} for dimension `{dim}` outside [{min}, {max}]")]
    Range {
        dim: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("record {row} does not match its design row")]
    Alignment { row: usize },

    #[error("output variance is zero; sensitivity indices are undefined")]
    DegenerateVariance,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("environment failed at trial {trial}: {message}")]
    Environment { trial: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
