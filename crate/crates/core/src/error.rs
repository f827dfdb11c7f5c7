use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// Header is missing a required column, or names an unknown/duplicate one.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed. `row` is the 1-based data row (header excluded).
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// A parsed value lies outside the physical bounds of its column.
    #[error("validation error at row {row}: {column} = {value} is outside {bounds}")]
    Validation {
        row: usize,
        column: String,
        value: f64,
        bounds: String,
    },

    #[error("frame has no data rows")]
    EmptyFrame,

    #[error("gap error: {0}")]
    Gap(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("not enough data: {0}")]
    EmptyDataset(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("model format error: {0}")]
    Format(String),

    #[error("unsupported model format version {found} (this build reads version {expected})")]
    Version { found: u16, expected: u16 },

    #[error("missing result cell: {0}")]
    MissingCell(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad command line, config key or parameter.
pub const EXIT_USAGE: i32 = 1;
/// Input data or file could not be read, parsed or used.
pub const EXIT_DATA: i32 = 2;
/// One or more trainings diverged.
pub const EXIT_TRAINING: i32 = 3;

impl Error {
    /// Command-line exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => EXIT_USAGE,
            Error::Divergence { .. } => EXIT_TRAINING,
            _ => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
