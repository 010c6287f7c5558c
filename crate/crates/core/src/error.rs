use thiserror::Error;

/// Errors returned by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Not enough observations to build the requested embedding.
    #[error("insufficient data: need at least {required} observations, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("column '{name}' has length {len}, expected {expected}")]
    ColumnLength {
        name: String,
        len: usize,
        expected: usize,
    },

    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),

    #[error("duplicate embedding coordinate ({0}, lag {1})")]
    DuplicateCoordinate(String, usize),

    #[error("time index must be strictly increasing with unit step (at row {0})")]
    IrregularTime(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty library")]
    EmptyLibrary,

    /// A library/prediction split produced an empty side.
    #[error("empty {0} partition")]
    EmptyPartition(&'static str),

    #[error("overlapping ranges: library {lib:?} and prediction {pred:?}")]
    OverlappingRanges {
        lib: (i64, i64),
        pred: (i64, i64),
    },

    /// A prediction row's origin time also appears in its library.
    #[error("prediction origin {0} appears in the library")]
    Leakage(i64),

    /// A computation produced no usable number.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
