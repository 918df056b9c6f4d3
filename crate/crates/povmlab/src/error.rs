//! Error types shared by all lab modules.

use thiserror::Error;

/// Errors raised by grid construction, state preparation, scheme evolution
/// and the diagnostic operations.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    /// A constructor argument violates its precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state (or a shifted copy of it) carries more probability mass near
    /// the box boundary than the periodic-grid guard allows.
    #[error("localization guard violated for {what}: boundary mass {mass:.3e} exceeds {bound:.1e}")]
    Localization {
        what: String,
        mass: f64,
        bound: f64,
    },

    /// Two values live on incompatible grids.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// A dense-path size guard was exceeded.
    #[error("size guard exceeded: {n} > {max} ({hint})")]
    SizeGuard { n: usize, max: usize, hint: String },

    /// The eigenvalue-gap condition of a calibrated scheme fails.
    #[error("calibration error: eigenvalue gap |{a} - {b}| = {gap:.6} must exceed delta/lambda = {required:.6}")]
    Calibration {
        a: f64,
        b: f64,
        gap: f64,
        required: f64,
    },

    /// An outcome partition does not cover the range it must cover.
    #[error("partition coverage error: {0}")]
    Coverage(String),

    /// Conditioning on an outcome of (near-)zero probability.
    #[error("conditioning error: outcome probability {p:.3e} below {min:.1e}")]
    Conditioning { p: f64, min: f64 },

    /// A scheme is configured outside its admissible regime.
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    /// A displacement or partition does not align with the grid.
    #[error("alignment error: {0}")]
    Alignment(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
