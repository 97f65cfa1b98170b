use thiserror::Error;

/// Errors produced by the `fgarch` crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank deficiency: {0}")]
    Rank(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Rank(_) => "rank",
            Error::Argument(_) => "argument",
            Error::Consistency(_) => "consistency",
            Error::NonConvergence(_) => "non_convergence",
            Error::Singular(_) => "singular",
            Error::Data(_) => "data",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
