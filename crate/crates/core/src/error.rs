use thiserror::Error;

/// Errors raised by model fitting, cross-validation and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("calibration matrix needs more rows than columns (got {rows}x{cols})")]
    TooFewRows { rows: usize, cols: usize },

    #[error("number of components {k} outside the admissible range 1..={max}")]
    ComponentRange { k: usize, max: usize },

    #[error("column index {col} out of range for {n_cols} columns")]
    ColumnIndex { col: usize, n_cols: usize },

    #[error("degenerate spectrum: eigenvalue {lambda} of component {k} is below the noise variance {sigma_eps}")]
    DegenerateSpectrum { k: usize, lambda: f64, sigma_eps: f64 },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fold {fold}, k = {k}: {source}")]
    Fold {
        fold: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
