//! Experiment configuration: one JSON document per experiment or sweep.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Top-level configuration document.
///
/// (`deny_unknown_fields` cannot combine with the flattened kind tag, so
/// unknown top-level keys are tolerated; the kind payloads reject typos.)
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub kind: KindConfig,
    /// Reduced Planck constant.
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    /// Tolerances checked into the result record.
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Optional parameter sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Seed for randomized sweep sampling.
    #[serde(default)]
    pub seed: u64,
    /// Default output directory (overridden by `--out`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn default_hbar() -> f64 {
    1.0
}

/// Experiment kinds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KindConfig {
    Discrete(DiscreteConfig),
    UnsharpPosition(UnsharpPositionConfig),
    Joint(JointConfig),
    ClassicalitySweep(ClassicalityConfig),
}

impl KindConfig {
    pub fn name(&self) -> &'static str {
        match self {
            KindConfig::Discrete(_) => "discrete",
            KindConfig::UnsharpPosition(_) => "unsharp-position",
            KindConfig::Joint(_) => "joint",
            KindConfig::ClassicalitySweep(_) => "classicality-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub box_length: f64,
}

/// State preparations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum StateConfig {
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default)]
        mean_momentum: f64,
        variance: f64,
    },
    Bump {
        #[serde(default)]
        center: f64,
        half_width: f64,
    },
    /// Raw complex amplitudes `[re, im]` per grid point (normalized on load).
    Amplitudes { values: Vec<[f64; 2]> },
}

/// Discrete-observable experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    /// Eigenvalues of the measured observable, one per object dimension
    /// (embedded on an m-point grid, padded to an even size >= 4).
    pub eigenvalues: Vec<f64>,
    pub probe_grid: GridConfig,
    /// Probe preparation; ignored when `delta` selects the calibrated bump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<StateConfig>,
    pub lambda: f64,
    /// When set, builds the calibrated scheme: bump probe supported in
    /// `(-delta/2, delta/2)` and eigenvalue-centered pointer cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Object amplitudes (equal superposition when omitted).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_state: Option<StateConfig>,
    /// Skip the n^2-evolution extraction cross-check.
    #[serde(default)]
    pub skip_extraction: bool,
}

/// Unsharp position experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UnsharpPositionConfig {
    pub object_grid: GridConfig,
    pub probe_grid: GridConfig,
    pub probe: StateConfig,
    pub lambda: f64,
    pub object_state: StateConfig,
    /// Number of uniform outcome cells (ignored when `cell_boundaries` set).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    /// Explicit cell boundaries in object-value units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_boundaries: Option<Vec<f64>>,
    #[serde(default)]
    pub skip_extraction: bool,
}

/// Joint position-momentum experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub object_grid: GridConfig,
    pub probe1_grid: GridConfig,
    pub probe2_grid: GridConfig,
    pub probe1: StateConfig,
    pub probe2: StateConfig,
    pub lambda: f64,
    pub mu: f64,
    pub object_state: StateConfig,
    #[serde(default = "default_cells")]
    pub n_cells_q: usize,
    #[serde(default = "default_cells")]
    pub n_cells_p: usize,
    /// Run the three-body dynamics (marginal checks, covariance, numeric
    /// inaccuracies); the closed-form budget always runs.
    #[serde(default = "default_true")]
    pub run_dynamics: bool,
    /// Covariance displacement in (position, momentum) grid steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_steps: Option<(i64, i64)>,
}

fn default_cells() -> usize {
    16
}

fn default_true() -> bool {
    true
}

/// Classicality-regime experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassicalityConfig {
    pub object_grid: GridConfig,
    pub probe1_grid: GridConfig,
    pub probe2_grid: GridConfig,
    pub probe1: StateConfig,
    pub probe2: StateConfig,
    pub lambda: f64,
    pub mu: f64,
    pub object_state: StateConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.01
}

/// Tolerances checked into every result record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Operator max-norm checks (effects, completeness, calibration).
    pub effect: f64,
    /// Probability sums and reproducibility checks.
    pub probability: f64,
    /// First-kind deviation for standard couplings.
    pub first_kind: f64,
    /// Repeatability deficit of calibrated schemes.
    pub repeatability: f64,
    /// Relative residual of the variance decomposition.
    pub variance_identity: f64,
    /// Marginal and covariance deviations of the joint model.
    pub joint_dynamics: f64,
    /// Slack on the inaccuracy-product lower bounds.
    pub budget_bound: f64,
    /// Relative agreement between simulated and closed-form inaccuracies.
    pub inaccuracy_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            effect: 1e-8,
            probability: 1e-9,
            first_kind: 1e-7,
            repeatability: 1e-6,
            variance_identity: 1e-6,
            joint_dynamics: 1e-6,
            budget_bound: 1e-9,
            inaccuracy_relative: 1e-4,
        }
    }
}

/// A parameter sweep: a cartesian grid of axes, random samples, or both.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSweep>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomSweep {
    pub count: usize,
    pub ranges: Vec<RandomRange>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomRange {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(CliError::Validation(format!(
                "hbar: {} must be positive",
                self.hbar
            )));
        }
        match &self.kind {
            KindConfig::Discrete(c) => {
                if c.eigenvalues.is_empty() {
                    return Err(CliError::Validation(
                        "eigenvalues: must not be empty".into(),
                    ));
                }
                validate_grid("probe_grid", &c.probe_grid)?;
                if c.delta.is_none() && c.probe.is_none() {
                    return Err(CliError::Validation(
                        "probe: required unless delta selects the calibrated bump".into(),
                    ));
                }
            }
            KindConfig::UnsharpPosition(c) => {
                validate_grid("object_grid", &c.object_grid)?;
                validate_grid("probe_grid", &c.probe_grid)?;
                if c.n_cells.is_none() && c.cell_boundaries.is_none() {
                    return Err(CliError::Validation(
                        "n_cells or cell_boundaries: one must be given".into(),
                    ));
                }
            }
            KindConfig::Joint(c) => {
                validate_grid("object_grid", &c.object_grid)?;
                validate_grid("probe1_grid", &c.probe1_grid)?;
                validate_grid("probe2_grid", &c.probe2_grid)?;
                if c.lambda == 0.0 || c.mu == 0.0 {
                    return Err(CliError::Validation(
                        "lambda, mu: joint schemes need nonzero couplings".into(),
                    ));
                }
            }
            KindConfig::ClassicalitySweep(c) => {
                validate_grid("object_grid", &c.object_grid)?;
                validate_grid("probe1_grid", &c.probe1_grid)?;
                validate_grid("probe2_grid", &c.probe2_grid)?;
                if !(c.epsilon > 0.0) {
                    return Err(CliError::Validation(format!(
                        "epsilon: {} must be positive",
                        c.epsilon
                    )));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() && sweep.random.is_none() {
                return Err(CliError::Validation(
                    "sweep: needs axes or a random block".into(),
                ));
            }
            if !sweep.axes.is_empty() && sweep.random.is_some() {
                return Err(CliError::Validation(
                    "sweep: axes and random sampling are mutually exclusive".into(),
                ));
            }
            for axis in &sweep.axes {
                if axis.values.is_empty() {
                    return Err(CliError::Validation(format!(
                        "sweep axis {}: values must not be empty",
                        axis.parameter
                    )));
                }
            }
            if let Some(r) = &sweep.random {
                if r.count == 0 || r.ranges.is_empty() {
                    return Err(CliError::Validation(
                        "sweep.random: needs count > 0 and at least one range".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn validate_grid(field: &str, grid: &GridConfig) -> Result<()> {
    if grid.n_points < 4 || !grid.n_points.is_multiple_of(2) {
        return Err(CliError::Validation(format!(
            "{field}.n_points: {} must be even and at least 4",
            grid.n_points
        )));
    }
    if !(grid.box_length > 0.0) {
        return Err(CliError::Validation(format!(
            "{field}.box_length: {} must be positive",
            grid.box_length
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_unsharp_position_config() {
        let text = r#"{
            "kind": "unsharp-position",
            "object_grid": { "n_points": 64, "box_length": 24.0 },
            "probe_grid": { "n_points": 64, "box_length": 24.0 },
            "probe": { "state": "gaussian", "variance": 0.25 },
            "lambda": 1.0,
            "object_state": { "state": "gaussian", "variance": 1.0 },
            "n_cells": 8
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.kind.name(), "unsharp-position");
        assert_eq!(config.hbar, 1.0);
    }

    #[test]
    fn odd_grid_size_is_a_validation_error_naming_the_field() {
        let text = r#"{
            "kind": "unsharp-position",
            "object_grid": { "n_points": 63, "box_length": 24.0 },
            "probe_grid": { "n_points": 64, "box_length": 24.0 },
            "probe": { "state": "gaussian", "variance": 0.25 },
            "lambda": 1.0,
            "object_state": { "state": "gaussian", "variance": 1.0 },
            "n_cells": 8
        }"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("object_grid.n_points"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "kind": "unsharp-position",
            "object_grid": { "n_points": 64, "box_length": 24.0 },
            "probe_grid": { "n_points": 64, "box_length": 24.0 },
            "probe": { "state": "gaussian", "variance": 0.25 },
            "lambda": 1.0,
            "object_state": { "state": "gaussian", "variance": 1.0 },
            "n_cells": 8,
            "typo_field": 3
        }"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let text = r#"{
            "kind": "joint",
            "object_grid": { "n_points": 64, "box_length": 24.0 },
            "probe1_grid": { "n_points": 64, "box_length": 24.0 },
            "probe2_grid": { "n_points": 64, "box_length": 24.0 },
            "probe1": { "state": "gaussian", "variance": 0.25 },
            "probe2": { "state": "gaussian", "variance": 1.0 },
            "lambda": 1.0,
            "mu": 1.0,
            "object_state": { "state": "gaussian", "variance": 0.5 },
            "sweep": { "axes": [ { "parameter": "lambda", "values": [0.5, 1.0, 2.0] } ] },
            "seed": 7
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(config, back);
    }
}
