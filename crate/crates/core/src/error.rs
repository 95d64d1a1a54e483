use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Smallest |R_ii| of the QR factor relative to the largest fell below the rank threshold.
    #[error("design matrix is not column full rank (|R| diagonal ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("matrix is not symmetric: entries ({row}, {col}) and ({col}, {row}) differ by {diff:e}")]
    AsymmetricInput { row: usize, col: usize, diff: f64 },

    #[error("spectral gap {gap:e} is below tolerance {tol:e}; leading eigenvector is ill-defined")]
    SpectralGapTooSmall { gap: f64, tol: f64 },

    #[error("leading eigenvector has entry {value:e} at index {index}; the supra graph is likely disconnected")]
    NegativeEntries { index: usize, value: f64 },

    #[error("community {0} has no members")]
    EmptyCommunity(usize),

    #[error("column {0} has zero variance")]
    ZeroVariance(usize),

    #[error("all nonzero entries equal {0}; cannot rescale to [1, 2]")]
    DegenerateRange(f64),

    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),

    #[error("no covariates survive VIF screening")]
    NoCovariatesSurvive,

    #[error("{}:{line}{}: {message}", path.display(), column.map(|c| format!(":{c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::RankDeficient { .. }
                | Error::SpectralGapTooSmall { .. }
                | Error::NegativeEntries { .. }
                | Error::DegenerateRange(_)
                | Error::AllReplicationsFailed(_)
                | Error::NoCovariatesSurvive
        )
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
