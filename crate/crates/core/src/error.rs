//! Error type shared by the estimation and simulation routines.

use thiserror::Error;

/// Errors produced while building designs, fitting models, or running
/// simulations.
#[derive(Debug, Error)]
pub enum Error {
    /// A CSV cell failed to parse. Row and column are 1-based and count the
    /// header as row 1.
    #[error("csv parse error at row {row}, column {col}: {msg}")]
    CsvParse { row: usize, col: usize, msg: String },

    /// The series is too short for the requested lag structure.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A design matrix ended up with zero rows or zero columns.
    #[error("empty design: {0}")]
    EmptyDesign(String),

    /// A regressor column is constant and cannot be scaled to unit RMS
    /// (the intercept column is exempt).
    #[error("degenerate column {name}: constant across all rows")]
    DegenerateColumn { name: String },

    /// A lag-index set contains lag 0 or a duplicate entry.
    #[error("invalid lag set: {0}")]
    InvalidLagSet(String),

    /// A configuration value is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two arrays that must agree in length or shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A NaN or infinity reached a place that requires finite input.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An observation weight is zero, negative, or non-finite.
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    /// The non-negative least-squares active-set loop exceeded its pivot
    /// budget without converging.
    #[error("nnls exceeded the pivot budget of {budget}")]
    MaxPivots { budget: usize },

    /// All residuals are zero, so no volatility scale can be fitted.
    #[error("zero residual variance: {0}")]
    ZeroResidualVariance(String),

    /// An iterative numeric procedure failed to make progress.
    #[error("numeric failure at iteration {iteration}: {msg}")]
    NumericFailure { iteration: usize, msg: String },

    /// A simulated path left the representable range.
    #[error("simulated path diverged at t = {t}")]
    ExplosivePath { t: usize },

    /// Underlying I/O failure when reading or writing files.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used by every fallible function in this crate.
pub type Result<T> = std::result::Result<T, Error>;
