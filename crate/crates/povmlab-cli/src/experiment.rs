//! Experiment orchestration: build lab objects from a config, run the
//! module operations for the chosen kind, and collect every metric into a
//! result record with declared-tolerance pass/fail lines.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use povmlab::classicality::{classicality_report, disturbance_metric};
use povmlab::continuous::{confidence_function, smeared_position_povm, variance_relation_report};
use povmlab::discrete::{
    calibrated_von_neumann_scheme, calibration_defect, measured_effects_discrete,
    standard_discrete_scheme, DiscreteObservable,
};
use povmlab::grid::{GridSpace, Partition};
use povmlab::joint::{
    covariance_check, joint_confidence_functions, joint_distribution, joint_marginal_check,
    simulated_inaccuracy_variances, variance_budget, JointScheme,
};
use povmlab::linalg;
use povmlab::scheme::{
    commutativity_check, extract_povm, first_kind_check, pointer_statistics, repeatability_check,
    MeasurementScheme, Povm, POVM_EXTRACTION_LIMIT,
};
use povmlab::state::WaveFunction;
use povmlab::{LabError, PlanckConstant};

use crate::config::{
    ClassicalityConfig, DiscreteConfig, ExperimentConfig, GridConfig, JointConfig, KindConfig,
    StateConfig, Tolerances, UnsharpPositionConfig,
};
use crate::error::{CliError, Result};

/// Hard ceiling on sweep size.
pub const SWEEP_LIMIT: usize = 10_000;

/// One declared tolerance with its measured value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ToleranceCheck {
    fn leq(name: &str, value: f64, tolerance: f64) -> Self {
        ToleranceCheck {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// The full outcome of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    /// Parameter values applied by the sweep for this row.
    pub swept: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub distributions: BTreeMap<String, Vec<f64>>,
    pub checks: Vec<ToleranceCheck>,
    pub version: String,
    /// Wall time is volatile and excluded from exports so identical runs
    /// produce byte-identical files; `report` prints it instead.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl ResultRecord {
    pub fn passed_all(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn build_state(space: &GridSpace, cfg: &StateConfig, hbar: PlanckConstant) -> Result<WaveFunction> {
    match cfg {
        StateConfig::Gaussian {
            center,
            mean_momentum,
            variance,
        } => Ok(WaveFunction::gaussian(
            space,
            *center,
            *mean_momentum,
            *variance,
            hbar,
        )?),
        StateConfig::Bump { center, half_width } => {
            Ok(WaveFunction::bump(space, *center, *half_width)?)
        }
        StateConfig::Amplitudes { values } => {
            if values.len() != space.n_points() {
                return Err(CliError::Validation(format!(
                    "object_state.values: {} amplitudes on a {}-point grid",
                    values.len(),
                    space.n_points()
                )));
            }
            let mut samples: Vec<Complex64> = values
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            let norm: f64 = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
                * space.spacing())
            .sqrt();
            if norm <= 0.0 {
                return Err(CliError::Validation(
                    "object_state.values: zero vector".into(),
                ));
            }
            samples.iter_mut().for_each(|z| *z /= norm);
            Ok(WaveFunction::from_samples(space.clone(), samples)?)
        }
    }
}

fn grid(cfg: &GridConfig) -> Result<GridSpace> {
    Ok(GridSpace::new(cfg.n_points, cfg.box_length)?)
}

/// Object grid for an abstract discrete observable: one point per
/// eigenvalue, padded to an even count of at least 4.
fn discrete_object(eigenvalues: &[f64]) -> Result<DiscreteObservable> {
    let m = eigenvalues.len();
    let n = m.max(4).next_multiple_of(2);
    let space = GridSpace::new(n, n as f64)?;
    let samples: Vec<f64> = (0..n)
        .map(|k| eigenvalues[k.min(m - 1)])
        .collect();
    Ok(DiscreteObservable::from_position_samples(
        space, &samples, 1e-12,
    )?)
}

struct RunOutput {
    metrics: BTreeMap<String, f64>,
    distributions: BTreeMap<String, Vec<f64>>,
    checks: Vec<ToleranceCheck>,
}

fn max_extraction_deviation(
    scheme: &MeasurementScheme,
    closed: &Povm,
) -> std::result::Result<f64, LabError> {
    let extracted = extract_povm(scheme, scheme.object_space().n_points())?;
    let mut worst = 0.0_f64;
    for (a, b) in closed.effects.iter().zip(extracted.effects.iter()) {
        worst = worst.max(linalg::max_abs_diff(&a.to_dense(), &b.to_dense()));
    }
    Ok(worst)
}

fn run_discrete(cfg: &DiscreteConfig, hbar: PlanckConstant, tol: &Tolerances) -> Result<RunOutput> {
    let observable = discrete_object(&cfg.eigenvalues)?;
    let probe_space = grid(&cfg.probe_grid)?;
    let calibrated = cfg.delta.is_some();
    let scheme = match cfg.delta {
        Some(delta) => {
            calibrated_von_neumann_scheme(&observable, delta, cfg.lambda, &probe_space, hbar)?.0
        }
        None => {
            let probe_cfg = cfg.probe.as_ref().ok_or_else(|| {
                CliError::Validation("probe: required without delta".into())
            })?;
            let probe = build_state(&probe_space, probe_cfg, hbar)?;
            standard_discrete_scheme(&observable, &probe, cfg.lambda, hbar)?
        }
    };
    let object_space = observable.space().clone();
    let object_state = match &cfg.object_state {
        Some(s) => build_state(&object_space, s, hbar)?,
        None => {
            let n = object_space.n_points();
            let amp = Complex64::new(1.0 / (n as f64 * object_space.spacing()).sqrt(), 0.0);
            WaveFunction::from_samples(object_space.clone(), vec![amp; n])?
        }
    };

    let povm = measured_effects_discrete(&scheme, &observable)?;
    let stats = pointer_statistics(&scheme, &object_state)?;
    let stat_sum: f64 = stats.iter().sum();

    let mut metrics = BTreeMap::new();
    let mut checks = Vec::new();
    metrics.insert(
        "effect_projection_deviation".into(),
        calibration_defect(&povm, &observable),
    );
    metrics.insert("completeness_defect".into(), povm.completeness_defect());
    metrics.insert("positivity_defect".into(), povm.positivity_defect());
    metrics.insert("commutativity".into(), commutativity_check(&povm));
    let fk = first_kind_check(&scheme, &object_state, &povm)?;
    metrics.insert("first_kind_deviation".into(), fk);
    let rep = repeatability_check(&scheme, &object_state)?;
    metrics.insert("repeatability_deficit".into(), rep);
    metrics.insert("probability_sum_error".into(), (stat_sum - 1.0).abs());

    if !cfg.skip_extraction && object_space.n_points() <= POVM_EXTRACTION_LIMIT {
        let dev = max_extraction_deviation(&scheme, &povm)?;
        metrics.insert("extraction_deviation".into(), dev);
        checks.push(ToleranceCheck::leq("extraction_deviation", dev, tol.effect));
    }

    checks.push(ToleranceCheck::leq(
        "completeness_defect",
        metrics["completeness_defect"],
        tol.effect,
    ));
    checks.push(ToleranceCheck::leq(
        "positivity_defect",
        metrics["positivity_defect"],
        tol.effect,
    ));
    checks.push(ToleranceCheck::leq(
        "commutativity",
        metrics["commutativity"],
        tol.effect,
    ));
    checks.push(ToleranceCheck::leq("first_kind_deviation", fk, tol.first_kind));
    checks.push(ToleranceCheck::leq(
        "probability_sum_error",
        metrics["probability_sum_error"],
        tol.probability,
    ));
    if calibrated {
        checks.push(ToleranceCheck::leq(
            "effect_projection_deviation",
            metrics["effect_projection_deviation"],
            tol.effect,
        ));
        checks.push(ToleranceCheck::leq(
            "repeatability_deficit",
            rep,
            tol.repeatability,
        ));
    }

    let mut distributions = BTreeMap::new();
    distributions.insert("pointer_statistics".into(), stats);
    distributions.insert(
        "pointer_values".into(),
        scheme.pointer().pointer_values.clone(),
    );
    Ok(RunOutput {
        metrics,
        distributions,
        checks,
    })
}

fn run_unsharp(
    cfg: &UnsharpPositionConfig,
    hbar: PlanckConstant,
    tol: &Tolerances,
) -> Result<RunOutput> {
    let object_space = grid(&cfg.object_grid)?;
    let probe_space = grid(&cfg.probe_grid)?;
    let probe = build_state(&probe_space, &cfg.probe, hbar)?;
    let object_state = build_state(&object_space, &cfg.object_state, hbar)?;
    let cells = match (&cfg.cell_boundaries, cfg.n_cells) {
        (Some(b), _) => Partition::from_boundaries(b)?,
        (None, Some(n)) => Partition::uniform_cover(&object_space, n)?,
        (None, None) => unreachable!("validated"),
    };
    let scheme = MeasurementScheme::standard_position(
        object_space.clone(),
        probe.clone(),
        cfg.lambda,
        cells.clone(),
        hbar,
    )?;

    let e = confidence_function(&probe, cfg.lambda)?;
    let povm = smeared_position_povm(&e, &cells, &object_space)?;
    let report = variance_relation_report(&object_state, &probe, cfg.lambda)?;
    let stats = pointer_statistics(&scheme, &object_state)?;
    let stat_sum: f64 = stats.iter().sum();
    let fk = first_kind_check(&scheme, &object_state, &povm)?;
    let rep = repeatability_check(&scheme, &object_state)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("measured_variance".into(), report.measured_variance);
    metrics.insert("object_variance".into(), report.object_variance);
    metrics.insert("noise".into(), report.noise);
    let residual_rel = report.residual() / report.measured_variance.abs().max(1e-300);
    metrics.insert("variance_identity_residual_rel".into(), residual_rel);
    metrics.insert("confidence_variance".into(), e.variance());
    metrics.insert("completeness_defect".into(), povm.completeness_defect());
    metrics.insert("positivity_defect".into(), povm.positivity_defect());
    metrics.insert("commutativity".into(), commutativity_check(&povm));
    metrics.insert("first_kind_deviation".into(), fk);
    metrics.insert("repeatability_deficit".into(), rep);
    metrics.insert("probability_sum_error".into(), (stat_sum - 1.0).abs());

    let mut checks = vec![
        ToleranceCheck::leq(
            "variance_identity_residual_rel",
            residual_rel,
            tol.variance_identity,
        ),
        ToleranceCheck::leq(
            "completeness_defect",
            metrics["completeness_defect"],
            tol.effect,
        ),
        ToleranceCheck::leq(
            "positivity_defect",
            metrics["positivity_defect"],
            tol.effect,
        ),
        ToleranceCheck::leq("first_kind_deviation", fk, tol.first_kind),
        ToleranceCheck::leq(
            "probability_sum_error",
            metrics["probability_sum_error"],
            tol.probability,
        ),
    ];

    if !cfg.skip_extraction && object_space.n_points() <= POVM_EXTRACTION_LIMIT {
        let dev = max_extraction_deviation(&scheme, &povm)?;
        metrics.insert("extraction_deviation".into(), dev);
        // Sampled-density convolution vs analytic branch masses: slightly
        // looser than pure operator algebra.
        checks.push(ToleranceCheck::leq("extraction_deviation", dev, 1e-7));
    }

    let mut distributions = BTreeMap::new();
    distributions.insert("pointer_statistics".into(), stats);
    distributions.insert("confidence_density".into(), e.density().to_vec());
    Ok(RunOutput {
        metrics,
        distributions,
        checks,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_joint_scheme(
    object_grid: &GridConfig,
    probe1_grid: &GridConfig,
    probe2_grid: &GridConfig,
    probe1: &StateConfig,
    probe2: &StateConfig,
    lambda: f64,
    mu: f64,
    n_cells_q: usize,
    n_cells_p: usize,
    hbar: PlanckConstant,
) -> Result<JointScheme> {
    let object_space = grid(object_grid)?;
    let s1 = grid(probe1_grid)?;
    let s2 = grid(probe2_grid)?;
    let phi1 = build_state(&s1, probe1, hbar)?;
    let phi2 = build_state(&s2, probe2, hbar)?;
    Ok(JointScheme::with_uniform_cells(
        object_space,
        phi1,
        phi2,
        lambda,
        mu,
        hbar,
        n_cells_q,
        n_cells_p,
    )?)
}

fn run_joint(cfg: &JointConfig, hbar: PlanckConstant, tol: &Tolerances) -> Result<RunOutput> {
    let scheme = build_joint_scheme(
        &cfg.object_grid,
        &cfg.probe1_grid,
        &cfg.probe2_grid,
        &cfg.probe1,
        &cfg.probe2,
        cfg.lambda,
        cfg.mu,
        cfg.n_cells_q,
        cfg.n_cells_p,
        hbar,
    )?;
    let object_state = build_state(scheme.object_space(), &cfg.object_state, hbar)?;

    let budget = variance_budget(&scheme)?;
    let h2 = hbar.value() * hbar.value();
    let mut metrics = BTreeMap::new();
    metrics.insert("var_e".into(), budget.var_e);
    metrics.insert("var_f".into(), budget.var_f);
    metrics.insert("q_term".into(), budget.q_term);
    metrics.insert("d_term".into(), budget.d_term);
    metrics.insert("x_ratio".into(), budget.x_ratio);
    metrics.insert("product".into(), budget.product);
    let residual = budget.decomposition_residual();
    metrics.insert("budget_identity_residual_rel".into(), residual);

    let mut checks = vec![
        ToleranceCheck::leq("budget_identity_residual_rel", residual, tol.budget_bound),
        ToleranceCheck::leq(
            "q_term_bound_violation",
            h2 / 8.0 - budget.q_term,
            tol.budget_bound,
        ),
        ToleranceCheck::leq(
            "d_term_bound_violation",
            h2 / 8.0 - budget.d_term,
            tol.budget_bound,
        ),
        ToleranceCheck::leq(
            "product_bound_violation",
            h2 / 4.0 - budget.product,
            tol.budget_bound,
        ),
    ];
    metrics.insert("q_term_bound_violation".into(), h2 / 8.0 - budget.q_term);
    metrics.insert("d_term_bound_violation".into(), h2 / 8.0 - budget.d_term);
    metrics.insert("product_bound_violation".into(), h2 / 4.0 - budget.product);

    let mut distributions = BTreeMap::new();
    if cfg.run_dynamics {
        let dist = joint_distribution(&scheme, &object_state)?;
        let total: f64 = dist.iter().sum();
        metrics.insert("distribution_sum_error".into(), (total - 1.0).abs());
        let (dev_q, dev_p) = joint_marginal_check(&scheme, &object_state)?;
        metrics.insert("marginal_deviation_q".into(), dev_q);
        metrics.insert("marginal_deviation_p".into(), dev_p);
        let (num_ve, num_vf) = simulated_inaccuracy_variances(&scheme, &object_state)?;
        let ve_rel = (num_ve - budget.var_e).abs() / budget.var_e;
        let vf_rel = (num_vf - budget.var_f).abs() / budget.var_f;
        metrics.insert("numeric_var_e".into(), num_ve);
        metrics.insert("numeric_var_f".into(), num_vf);
        metrics.insert("numeric_var_e_rel_error".into(), ve_rel);
        metrics.insert("numeric_var_f_rel_error".into(), vf_rel);
        checks.push(ToleranceCheck::leq("marginal_deviation_q", dev_q, tol.joint_dynamics));
        checks.push(ToleranceCheck::leq("marginal_deviation_p", dev_p, tol.joint_dynamics));
        checks.push(ToleranceCheck::leq(
            "numeric_var_e_rel_error",
            ve_rel,
            tol.inaccuracy_relative,
        ));
        checks.push(ToleranceCheck::leq(
            "distribution_sum_error",
            metrics["distribution_sum_error"],
            1e-8,
        ));
        if let Some((sq, sp)) = cfg.covariance_steps {
            let s0 = scheme.object_space();
            let dq = sq as f64 * s0.spacing();
            let dp = sp as f64 * s0.momentum_spacing(hbar);
            let dev = covariance_check(&scheme, &object_state, (dq, dp))?;
            metrics.insert("covariance_deviation".into(), dev);
            checks.push(ToleranceCheck::leq(
                "covariance_deviation",
                dev,
                tol.joint_dynamics,
            ));
        }
        let (e, f) = joint_confidence_functions(&scheme)?;
        distributions.insert("confidence_position".into(), e.density().to_vec());
        distributions.insert("confidence_momentum".into(), f.density().to_vec());
        distributions.insert(
            "joint_distribution".into(),
            dist.iter().copied().collect::<Vec<f64>>(),
        );
    }

    Ok(RunOutput {
        metrics,
        distributions,
        checks,
    })
}

fn run_classicality(
    cfg: &ClassicalityConfig,
    hbar: PlanckConstant,
    tol: &Tolerances,
) -> Result<RunOutput> {
    let scheme = build_joint_scheme(
        &cfg.object_grid,
        &cfg.probe1_grid,
        &cfg.probe2_grid,
        &cfg.probe1,
        &cfg.probe2,
        cfg.lambda,
        cfg.mu,
        8,
        8,
        hbar,
    )?;
    let object_state = build_state(scheme.object_space(), &cfg.object_state, hbar)?;
    let report = classicality_report(&scheme, &object_state, cfg.epsilon)?;
    let disturbance = disturbance_metric(&scheme, &object_state)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("c1_position_ratio".into(), report.c1_ratios.0);
    metrics.insert("c1_momentum_ratio".into(), report.c1_ratios.1);
    metrics.insert("c2_position_ratio".into(), report.c2_ratios.0);
    metrics.insert("c2_momentum_ratio".into(), report.c2_ratios.1);
    metrics.insert("c3_ratio".into(), report.c3_ratio);
    metrics.insert("c4_disturbance".into(), disturbance);
    metrics.insert("var_e".into(), report.var_e);
    metrics.insert("var_f".into(), report.var_f);
    metrics.insert("var_e_undisturbed".into(), report.var_e_undisturbed);
    metrics.insert("var_f_undisturbed".into(), report.var_f_undisturbed);
    metrics.insert("c1_to_c3_constant".into(), report.c1_to_c3_constant);
    metrics.insert("true_position".into(), report.true_values.0);
    metrics.insert("true_momentum".into(), report.true_values.1);
    metrics.insert("coverage_1".into(), report.coverage[0]);
    metrics.insert("coverage_2".into(), report.coverage[1]);
    metrics.insert("coverage_3".into(), report.coverage[2]);
    metrics.insert("c1_holds".into(), report.c1_holds() as u8 as f64);
    metrics.insert("c2_holds".into(), report.c2_holds() as u8 as f64);
    metrics.insert("c3_holds".into(), report.c3_holds() as u8 as f64);
    metrics.insert("c4_holds".into(), report.c4_holds() as u8 as f64);

    // The inequality chain is a theorem for every admissible scheme, so it
    // is always a declared check.
    let chain_violation = report.var_e_undisturbed * report.var_f_undisturbed
        - report.var_e * report.var_f;
    metrics.insert("chain_monotonicity_violation".into(), chain_violation);
    let mut checks = vec![ToleranceCheck::leq(
        "chain_monotonicity_violation",
        chain_violation,
        tol.budget_bound * report.var_e * report.var_f,
    )];
    if report.c2_holds() {
        let bound = hbar.value() * hbar.value() / (16.0 * cfg.epsilon);
        let violation = bound - report.var_e_undisturbed * report.var_f_undisturbed;
        metrics.insert("chain_bound_violation".into(), violation);
        checks.push(ToleranceCheck::leq(
            "chain_bound_violation",
            violation,
            tol.budget_bound * bound,
        ));
    }

    Ok(RunOutput {
        metrics,
        distributions: BTreeMap::new(),
        checks,
    })
}

/// Run a single experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let start = Instant::now();
    let hbar = PlanckConstant::new(config.hbar).map_err(CliError::from)?;
    let out = match &config.kind {
        KindConfig::Discrete(c) => run_discrete(c, hbar, &config.tolerances)?,
        KindConfig::UnsharpPosition(c) => run_unsharp(c, hbar, &config.tolerances)?,
        KindConfig::Joint(c) => run_joint(c, hbar, &config.tolerances)?,
        KindConfig::ClassicalitySweep(c) => run_classicality(c, hbar, &config.tolerances)?,
    };
    Ok(ResultRecord {
        config: config.clone(),
        swept: BTreeMap::new(),
        metrics: out.metrics,
        distributions: out.distributions,
        checks: out.checks,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Apply one swept parameter to a config.  Unknown names are validation
/// errors carrying the parameter path.
pub fn apply_parameter(config: &mut ExperimentConfig, name: &str, value: f64) -> Result<()> {
    fn set_gaussian_variance(state: &mut StateConfig, field: &str, value: f64) -> Result<()> {
        match state {
            StateConfig::Gaussian { variance, .. } => {
                *variance = value;
                Ok(())
            }
            _ => Err(CliError::Validation(format!(
                "{field}: only gaussian states have a variance to sweep"
            ))),
        }
    }
    match (&mut config.kind, name) {
        (_, "hbar") => {
            config.hbar = value;
            Ok(())
        }
        (KindConfig::Discrete(c), "lambda") => {
            c.lambda = value;
            Ok(())
        }
        (KindConfig::Discrete(c), "delta") => {
            c.delta = Some(value);
            Ok(())
        }
        (KindConfig::Discrete(c), "probe.variance") => {
            let probe = c.probe.as_mut().ok_or_else(|| {
                CliError::Validation("probe.variance: no probe block to sweep".into())
            })?;
            set_gaussian_variance(probe, "probe.variance", value)
        }
        (KindConfig::UnsharpPosition(c), "lambda") => {
            c.lambda = value;
            Ok(())
        }
        (KindConfig::UnsharpPosition(c), "probe.variance") => {
            set_gaussian_variance(&mut c.probe, "probe.variance", value)
        }
        (KindConfig::UnsharpPosition(c), "object.variance") => {
            set_gaussian_variance(&mut c.object_state, "object.variance", value)
        }
        (KindConfig::Joint(c), "lambda") => {
            c.lambda = value;
            Ok(())
        }
        (KindConfig::Joint(c), "mu") => {
            c.mu = value;
            Ok(())
        }
        (KindConfig::Joint(c), "probe1.variance") => {
            set_gaussian_variance(&mut c.probe1, "probe1.variance", value)
        }
        (KindConfig::Joint(c), "probe2.variance") => {
            set_gaussian_variance(&mut c.probe2, "probe2.variance", value)
        }
        (KindConfig::Joint(c), "object.variance") => {
            set_gaussian_variance(&mut c.object_state, "object.variance", value)
        }
        (KindConfig::ClassicalitySweep(c), "lambda") => {
            c.lambda = value;
            Ok(())
        }
        (KindConfig::ClassicalitySweep(c), "mu") => {
            c.mu = value;
            Ok(())
        }
        (KindConfig::ClassicalitySweep(c), "epsilon") => {
            c.epsilon = value;
            Ok(())
        }
        (KindConfig::ClassicalitySweep(c), "probe1.variance") => {
            set_gaussian_variance(&mut c.probe1, "probe1.variance", value)
        }
        (KindConfig::ClassicalitySweep(c), "probe2.variance") => {
            set_gaussian_variance(&mut c.probe2, "probe2.variance", value)
        }
        _ => Err(CliError::Validation(format!(
            "sweep parameter {name}: not supported for kind {}",
            config.kind.name()
        ))),
    }
}

/// Expand the sweep into per-row parameter assignments.
pub fn sweep_rows(config: &ExperimentConfig) -> Result<Vec<Vec<(String, f64)>>> {
    let sweep = match &config.sweep {
        Some(s) => s,
        None => return Ok(vec![Vec::new()]),
    };
    let mut rows: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &sweep.axes {
        let mut next = Vec::with_capacity(rows.len() * axis.values.len());
        for row in &rows {
            for &v in &axis.values {
                let mut r = row.clone();
                r.push((axis.parameter.clone(), v));
                next.push(r);
            }
        }
        rows = next;
        if rows.len() > SWEEP_LIMIT {
            return Err(CliError::Validation(format!(
                "sweep: {} rows exceeds the limit of {SWEEP_LIMIT}",
                rows.len()
            )));
        }
    }
    if let Some(random) = &sweep.random {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut random_rows = Vec::with_capacity(random.count);
        for _ in 0..random.count {
            let mut r = Vec::with_capacity(random.ranges.len());
            for range in &random.ranges {
                let v = rng.gen_range(range.min..range.max);
                r.push((range.parameter.clone(), v));
            }
            random_rows.push(r);
        }
        rows = random_rows;
    }
    if rows.len() > SWEEP_LIMIT {
        return Err(CliError::Validation(format!(
            "sweep: {} rows exceeds the limit of {SWEEP_LIMIT}",
            rows.len()
        )));
    }
    Ok(rows)
}

/// Run a sweep; rows execute independently (optionally in parallel) and the
/// output order always follows the row index.
pub fn run_sweep(config: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let rows = sweep_rows(config)?;
    let run_row = |assignments: &Vec<(String, f64)>| -> Result<ResultRecord> {
        let mut row_config = config.clone();
        row_config.sweep = None;
        for (name, value) in assignments {
            apply_parameter(&mut row_config, name, *value)?;
        }
        let mut record = run_experiment(&row_config)?;
        for (name, value) in assignments {
            record.swept.insert(name.clone(), *value);
        }
        Ok(record)
    };
    if threads <= 1 {
        rows.iter().map(run_row).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        pool.install(|| rows.par_iter().map(run_row).collect())
    }
}
