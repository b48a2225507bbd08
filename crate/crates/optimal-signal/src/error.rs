//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by signal construction, fitting, and backtesting.
#[derive(Debug, Error)]
pub enum Error {
    /// The panel already carries an intercept column.
    #[error("panel already has an intercept column")]
    AlreadyAugmented,

    /// An operation that requires the intercept was given a raw panel.
    #[error("panel has no intercept column; call augment_with_intercept first")]
    MissingIntercept,

    /// Two series that must share a time index do not.
    #[error("misaligned time index: {0}")]
    MisalignedIndex(String),

    /// A non-finite value where only finite values are allowed.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Not enough observations for the requested computation.
    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// The quadratic form alpha' Sigma alpha is not positive.
    #[error("degenerate variance: alpha lies in the null space of sigma")]
    DegenerateVariance,

    /// Covariance matrix cannot be factorized reliably.
    #[error(
        "covariance matrix is numerically singular (condition {condition:.3e}); \
         enable l2_lambda or pca_k regularization"
    )]
    SingularCovariance { condition: f64 },

    /// The mean vector is identically zero: no drift to exploit.
    #[error("mean vector is zero: no exploitable drift")]
    ZeroMeanVector,

    /// The neutrality constraint removes all of the drift.
    #[error("degenerate neutrality constraint: {0}")]
    DegenerateConstraint(String),

    /// Requested more principal components than the data supports.
    #[error("rank deficient: requested {requested} components, effective rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    /// Every coefficient was removed by the significance filter.
    #[error("significance filter removed every coefficient")]
    EmptyModel,

    /// Iterative optimizer hit its iteration budget while still improving.
    #[error("optimizer did not converge after {iterations} iterations (last gain {gap:.3e})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        best: Vec<f64>,
    },

    /// A feature column is constant and drop_constant is unset.
    #[error("constant feature column '{name}'; drop it or enable drop_constant")]
    ConstantColumn { name: String },

    /// Rolling standardization window exceeds the available history.
    #[error("insufficient history: rolling window {window} exceeds {rows} rows")]
    InsufficientHistory { window: usize, rows: usize },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Mutually incompatible configuration options.
    #[error("conflicting config: {0}")]
    ConfigConflict(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Malformed input file.
    #[error("parse error in {path} (row {row}): {detail}")]
    ParseError {
        path: String,
        row: usize,
        detail: String,
    },

    /// Price and feature files share no timestamps.
    #[error("price and feature files share fewer than 2 timestamps")]
    EmptyIntersection,

    /// Input rows out of order or duplicated.
    #[error("unsorted input in {path}: date {date} out of order or duplicated")]
    UnsortedInput { path: String, date: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Process exit code class: 2 for configuration/validation problems,
    /// 3 for numerical/solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateVariance
            | Error::SingularCovariance { .. }
            | Error::ZeroMeanVector
            | Error::DegenerateConstraint(_)
            | Error::RankDeficient { .. }
            | Error::EmptyModel
            | Error::NotConverged { .. } => 3,
            _ => 2,
        }
    }
}
