//! A numerical laboratory for quantum measurement schemes on discretized
//! one-dimensional systems.
//!
//! The crate simulates object-probe couplings of the form `exp(i lambda A (x) B)`,
//! reads pointer statistics off the probe after the interaction, and extracts
//! the positive-operator-valued measure (POVM) such a scheme actually
//! measures.  On top of that substrate it builds:
//!
//! - the discrete-observable scheme and its calibrated sharp limit,
//! - the unsharp position measurement with its confidence function and
//!   variance decomposition,
//! - the three-body joint position-momentum model with its phase-space
//!   outcome distribution, covariance, marginals, and the inaccuracy budget
//!   bounded below by `hbar^2/4`,
//! - quasi-classical regime diagnostics.
//!
//! States, operators and schemes are immutable values; every operation is a
//! pure function, so everything is safe to share across threads.

// Indexed loops mirror the summation indices of the formulas they
// implement, and `!(x > 0.0)` guards intentionally reject NaN.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classicality;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod hbar;
pub mod joint;
pub mod linalg;
pub mod operator;
pub mod profile;
pub mod scheme;
pub mod state;

pub use error::{LabError, Result};
pub use grid::{GridSpace, Interval, Partition};
pub use hbar::PlanckConstant;
pub use operator::{canonical_operators, moments, moments_mixed, HermitianOperator};
pub use profile::Profile;
pub use state::{tensor_state, DensityOperator, WaveFunction};
