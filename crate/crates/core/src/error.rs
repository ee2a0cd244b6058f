use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonance: response diverges at u = {u} (multipole order {l})")]
    Resonance { l: usize, u: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations (dim {dim})")]
    NoConvergence { index: usize, iterations: usize, dim: usize },

    #[error("eigenvectors are required for this operation")]
    MissingVectors,

    #[error("fit error: {0}")]
    Fit(String),

    #[error("curve alignment error: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::NoConvergence { .. } | Error::Resonance { .. })
    }
}
