use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("dimension mismatch: {0}")]
    Contract(String),

    #[error("rank-deficient system: {0}")]
    NumericalRank(String),

    #[error("target response has zero norm")]
    DegenerateTarget,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("{what}: expected {expected}, found {found}")]
    Schema {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid data: {message}")]
    Data { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("at distance {distance_m} m, frequency {frequency_hz} Hz: {source}")]
    AtPoint {
        distance_m: f64,
        frequency_hz: f64,
        #[source]
        source: Box<Error>,
    },
}

/// Broad failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(key: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Format { .. }
            | Error::Schema { .. }
            | Error::Data { .. }
            | Error::Validation { .. } => ErrorClass::Validation,
            Error::Io { .. } | Error::Csv(_) => ErrorClass::Io,
            Error::AtPoint { source, .. } => source.class(),
            Error::UnsupportedOrder { .. }
            | Error::Domain(_)
            | Error::DegenerateField(_)
            | Error::Contract(_)
            | Error::NumericalRank(_)
            | Error::DegenerateTarget
            | Error::NonFinite(_) => ErrorClass::Numerical,
        }
    }

    /// Exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 1,
            ErrorClass::Numerical => 2,
            ErrorClass::Io => 3,
        }
    }
}
