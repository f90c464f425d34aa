use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised by every stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: no observations")]
    Empty { path: PathBuf },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("coverage error for `{series}`: {message}")]
    Coverage { series: String, message: String },

    #[error("domain error: `{variable}` has value {value} on {date} which the transform does not accept")]
    Domain {
        variable: String,
        date: NaiveDate,
        value: f64,
    },

    #[error(
        "domain error: value {value} at position {position} is outside the transform's domain"
    )]
    DomainAt { position: usize, value: f64 },

    #[error("date range {from}..={to} selects no rows")]
    EmptyRange { from: NaiveDate, to: NaiveDate },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular design matrix: columns {} are linearly dependent on earlier columns", .columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line runner: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::Json(_) => 2,
            Error::Singular { .. } | Error::Numerical(_) => 4,
            Error::Parse { .. }
            | Error::Empty { .. }
            | Error::Schema(_)
            | Error::Coverage { .. }
            | Error::Domain { .. }
            | Error::DomainAt { .. }
            | Error::EmptyRange { .. }
            | Error::Io { .. }
            | Error::Csv(_) => 3,
        }
    }
}
