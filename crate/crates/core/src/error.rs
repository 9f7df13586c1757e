use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("hierarchy error: {0}")]
    Hierarchy(String),

    #[error("unknown taxonomy label `{0}`")]
    UnknownLabel(String),

    #[error("`{0}` is not a leaf of the taxonomy")]
    NotALeaf(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no sensitive attribute")]
    NoSensitiveAttribute,

    #[error("dataset has no quasi-identifiers")]
    NoQuasiIdentifiers,

    #[error("invalid k = {k}: {reason}")]
    InvalidK { k: usize, reason: String },

    #[error("sample of {requested} records requested from a dataset of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("numeric domain [{min}, {max}] has zero width")]
    ZeroWidthDomain { min: String, max: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("response parse error: {0}")]
    ResponseParse(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("authentication rejected by {endpoint} (HTTP {status})")]
    Auth { endpoint: String, status: u16 },

    #[error("request to {endpoint} timed out after {attempts} attempts")]
    Timeout { endpoint: String, attempts: u32 },

    #[error("no records accepted after {attempts} attempts")]
    NoAcceptedRecords { attempts: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
