use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("invalid draws: {0}")]
    InvalidDraws(String),

    #[error("chain aborted at sweep {sweep} in block `{block}`: {source}")]
    ChainAbort {
        sweep: usize,
        block: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures the sampler may treat as a rejected proposal.
    pub fn is_recoverable(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. })
    }

    /// Process exit status for the command-line tool, following `sysexits`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 64,
            Error::InvalidInput(_)
            | Error::Ingestion { .. }
            | Error::Format(_)
            | Error::DegenerateGeometry(_)
            | Error::InsufficientData(_) => 65,
            Error::NotPositiveDefinite { .. }
            | Error::NumericalDegeneracy(_)
            | Error::InvalidDraws(_)
            | Error::ChainAbort { .. } => 70,
            Error::Io { .. } => 74,
        }
    }
}
