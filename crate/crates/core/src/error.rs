use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("x = {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("derivative order {order} is not below the spline order {spline_order}")]
    DerivativeOrder { order: usize, spline_order: usize },

    #[error("rank-deficient design: {deficient} of {columns} columns are not determined by the data")]
    RankDeficient { deficient: usize, columns: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid sampled function: {0}")]
    InvalidSample(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite objective or gradient at the starting point")]
    NonFiniteStart,

    #[error("every training restart failed")]
    AllRestartsFailed,

    #[error("{path}: row {row}: {message}")]
    Parse { path: PathBuf, row: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
