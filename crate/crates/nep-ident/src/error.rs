//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by what
//! the caller can do about them: bad arguments (`InvalidInput`, `InvalidSpec`,
//! `ShapeMismatch`), data that genuinely lacks the required structure
//! (`NotNearlyPeriodic`, `NotNearUnitary`, `InsufficientSample`,
//! `DegenerateCompression`), numerical failure (`SingularMatrix`,
//! `NumericalBlowup`, `DivisionByZero`), and I/O or parsing trouble.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument value is outside the operation's domain (non-finite
    /// entries, empty vector, too few rows/columns, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector dimensions are incompatible.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A matrix that must be invertible is (numerically) singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A configuration parameter is invalid (negative tolerance, zero period,
    /// out-of-range index, ...).
    #[error("invalid parameter: {0}")]
    InvalidSpec(String),

    /// No transient/period pair certifies near eventual periodicity of the
    /// sample at the requested tolerance.
    #[error("no nearly periodic structure found at tolerance {eps:e}")]
    NotNearlyPeriodic { eps: f64 },

    /// The sample is too short for the requested construction.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// The compressed snapshot block lost rank, so the reduced realization
    /// cannot be assembled.
    #[error("degenerate compression: {0}")]
    DegenerateCompression(String),

    /// The reduced operator is too far from unitary for the unitary
    /// reduction; both defect norms are reported.
    #[error(
        "reduced operator is not near-unitary: \
         right defect {right_defect:e}, left defect {left_defect:e}, allowed {allowed:e}"
    )]
    NotNearUnitary {
        /// ‖A·A* − 1‖.
        right_defect: f64,
        /// ‖A*·A − 1‖.
        left_defect: f64,
        allowed: f64,
    },

    /// A rollout state left the trusted numeric range.
    #[error("numerical blowup at step {step}: entry magnitude {magnitude:e} exceeds {limit:e}")]
    NumericalBlowup {
        step: usize,
        magnitude: f64,
        limit: f64,
    },

    /// A denominator that must be nonzero vanished.
    #[error("division by zero: {0}")]
    DivisionByZero(String),

    /// A data generator could not satisfy its own constraints.
    #[error("generation failed: {0}")]
    GenerationFailed(String),

    /// Malformed on-disk data.
    #[error("parse error: {0}")]
    ParseError(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
