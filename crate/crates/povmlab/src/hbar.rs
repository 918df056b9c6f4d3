//! Planck's constant as an explicit configuration value.

use crate::error::{LabError, Result};

/// The reduced Planck constant, default 1.
///
/// Models that display their hbar dependence explicitly take this as a
/// parameter instead of assuming natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckConstant(f64);

impl PlanckConstant {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "hbar = {hbar} must be positive and finite"
            )));
        }
        Ok(PlanckConstant(hbar))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for PlanckConstant {
    fn default() -> Self {
        PlanckConstant(1.0)
    }
}
