use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("series is empty")]
    EmptySeries,

    #[error("series is constant (min == max == {0})")]
    DegenerateSeries(f64),

    #[error("series of length {len} is too short for windows of {input_len} inputs")]
    SeriesTooShort { len: usize, input_len: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from numerical breakdown rather than bad input shapes or IO.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFiniteInput(_))
    }
}
