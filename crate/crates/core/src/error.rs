use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the swapping library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: unknown level `{label}`")]
    UnknownLevel {
        row: usize,
        column: String,
        label: String,
    },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("tract `{0}` appears in more than one PUMA")]
    TractSpansPumas(String),
    #[error("household `{0}` appears in more than one tract")]
    HouseholdSpansTracts(String),
    #[error("duplicate person id `{0}`")]
    DuplicatePerson(String),
    #[error("unknown tract `{0}`")]
    UnknownTract(String),
    #[error("unknown PUMA `{0}`")]
    UnknownPuma(String),
    #[error("unknown household `{0}`")]
    UnknownHousehold(String),
    #[error("unknown variable `{0}`")]
    MissingVariable(String),
    #[error("row and column variable are both `{0}`")]
    SameVariable(String),
    #[error("variable `{0}` is not ordered")]
    UnorderedVariable(String),
    #[error("invalid bin boundaries for `{variable}`: {reason}")]
    InvalidBoundaries { variable: String, reason: String },
    #[error("cannot select {requested} records out of {available}")]
    CountTooLarge { requested: usize, available: usize },
    #[error("table has no cells equal to 1")]
    NoOnesInTable,
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("at least two swap rates are required, got {0}")]
    InsufficientRates(usize),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
