use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GildaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GildaError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("basis is not orthonormal (||B^T B - I||_F = {0:e})")]
    NotOrthonormal(f64),

    #[error("degenerate denominator: trace(R^T Sw R) = {value:e} <= {threshold:e}")]
    DegenerateDenominator { value: f64, threshold: f64 },

    #[error("within-class scatter is singular after ridge (condition number {condition:e})")]
    SingularWithin { condition: f64 },

    #[error("rank-deficient matrix: singular values span [{min:e}, {max:e}]")]
    RankDeficient { min: f64, max: f64 },

    #[error("degenerate singular spectrum: smallest relative singular value {ratio:e} < {min:e}")]
    DegenerateSpectrum { ratio: f64, min: f64 },

    #[error("degenerate baseline objective: |f_eig| = {0:e}")]
    DegenerateBaseline(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<GildaError>,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl GildaError {
    /// Short machine-readable tag, used for the `status` column of sweep output.
    pub fn code(&self) -> &'static str {
        match self {
            GildaError::InvalidDataset(_) => "invalid_dataset",
            GildaError::InvalidShape(_) => "invalid_shape",
            GildaError::DimensionMismatch { .. } => "dimension_mismatch",
            GildaError::NonFinite => "non_finite",
            GildaError::NotSymmetric(_) => "not_symmetric",
            GildaError::NotOrthonormal(_) => "not_orthonormal",
            GildaError::DegenerateDenominator { .. } => "degenerate_denominator",
            GildaError::SingularWithin { .. } => "singular_within",
            GildaError::RankDeficient { .. } => "rank_deficient",
            GildaError::DegenerateSpectrum { .. } => "degenerate_spectrum",
            GildaError::DegenerateBaseline(_) => "degenerate_baseline",
            GildaError::InvalidConfig(_) => "invalid_config",
            GildaError::AtIteration { source, .. } => source.code(),
            GildaError::Io { .. } => "io",
        }
    }

    /// Strips any `AtIteration` wrappers.
    pub fn root(&self) -> &GildaError {
        match self {
            GildaError::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        GildaError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
