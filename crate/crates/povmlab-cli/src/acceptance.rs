//! The acceptance suite: eight end-to-end criteria with pinned tolerances,
//! each printed as one pass/fail line.  `povmlab selftest` runs these, and
//! the integration test target asserts them.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use povmlab::classicality::{classicality_report, disturbance_metric};
use povmlab::continuous::{confidence_function, smeared_position_povm, variance_relation_report};
use povmlab::discrete::{
    calibrated_von_neumann_scheme, calibration_defect, measured_effects_discrete,
    standard_discrete_scheme, DiscreteObservable,
};
use povmlab::grid::{GridSpace, Partition};
use povmlab::joint::{
    covariance_check, joint_marginal_check, simulated_inaccuracy_variances, variance_budget,
    JointScheme,
};
use povmlab::linalg;
use povmlab::scheme::{
    commutativity_check, extract_povm, first_kind_check, repeatability_check,
    MeasurementScheme,
};
use povmlab::state::WaveFunction;
use povmlab::PlanckConstant;

use crate::config::ExperimentConfig;
use crate::experiment::run_sweep;
use crate::export;

/// One acceptance criterion's outcome.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "{}  criterion {}: {} ({:.2}s / limit {:.0}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.runtime_s,
            self.runtime_limit_s
        )
    }
}

struct Checks {
    lines: Vec<String>,
    passed: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            lines: Vec::new(),
            passed: true,
        }
    }

    fn leq(&mut self, name: &str, value: f64, bound: f64) {
        let ok = value <= bound;
        self.passed &= ok;
        self.lines.push(format!(
            "  [{}] {name}: {value:.3e} <= {bound:.1e}",
            if ok { "ok" } else { "FAIL" }
        ));
    }

    fn geq(&mut self, name: &str, value: f64, bound: f64) {
        let ok = value >= bound;
        self.passed &= ok;
        self.lines.push(format!(
            "  [{}] {name}: {value:.3e} >= {bound:.1e}",
            if ok { "ok" } else { "FAIL" }
        ));
    }

    fn is_true(&mut self, name: &str, ok: bool) {
        self.passed &= ok;
        self.lines
            .push(format!("  [{}] {name}", if ok { "ok" } else { "FAIL" }));
    }

    fn error(&mut self, context: &str, err: impl std::fmt::Display) {
        self.passed = false;
        self.lines.push(format!("  [FAIL] {context}: {err}"));
    }
}

fn hb() -> PlanckConstant {
    PlanckConstant::default()
}

fn finish(
    id: usize,
    name: &'static str,
    limit: f64,
    start: Instant,
    mut checks: Checks,
) -> CriterionResult {
    let runtime = start.elapsed().as_secs_f64();
    if runtime > limit {
        checks.passed = false;
        checks
            .lines
            .push(format!("  [FAIL] runtime {runtime:.2}s exceeds {limit:.0}s"));
    }
    CriterionResult {
        id,
        name,
        passed: checks.passed,
        runtime_s: runtime,
        runtime_limit_s: limit,
        details: checks.lines,
    }
}

/// Observable with one grid point per eigenvalue (padded to an even size).
fn point_observable(eigenvalues: &[f64]) -> DiscreteObservable {
    let m = eigenvalues.len();
    let n = m.max(4).next_multiple_of(2);
    let space = GridSpace::new(n, n as f64).unwrap();
    let samples: Vec<f64> = (0..n).map(|k| eigenvalues[k.min(m - 1)]).collect();
    DiscreteObservable::from_position_samples(space, &samples, 1e-12).unwrap()
}

fn superposition(space: &GridSpace, entries: &[(usize, Complex64)]) -> WaveFunction {
    let mut v = vec![Complex64::default(); space.n_points()];
    for (k, a) in entries {
        v[*k] = *a;
    }
    let norm: f64 = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * space.spacing()).sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    WaveFunction::from_samples(space.clone(), v).unwrap()
}

/// Criterion 1: the calibrated scheme measures the sharp observable exactly
/// and repeatably.
pub fn criterion_calibrated_sharp() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let run = || -> povmlab::Result<(f64, f64, f64)> {
        let a = point_observable(&[-1.0, 1.0]);
        let probe_space = GridSpace::new(256, 40.0)?;
        let (scheme, _) = calibrated_von_neumann_scheme(&a, 0.5, 1.0, &probe_space, hb())?;
        let povm = measured_effects_discrete(&scheme, &a)?;
        let sharp = calibration_defect(&povm, &a);
        let psi = superposition(
            a.space(),
            &[(0, Complex64::new(0.6, 0.0)), (1, Complex64::new(0.8, 0.0))],
        );
        let rep = repeatability_check(&scheme, &psi)?;
        let fk = first_kind_check(&scheme, &psi, &povm)?;
        Ok((sharp, rep, fk))
    };
    match run() {
        Ok((sharp, rep, fk)) => {
            c.leq("max|E_i - P_i|", sharp, 1e-8);
            c.leq("repeatability deficit", rep, 1e-6);
            c.leq("first-kind deviation", fk, 1e-7);
        }
        Err(e) => c.error("calibrated scheme", e),
    }
    finish(1, "calibrated sharp measurement", 1.0, start, c)
}

/// Criterion 2: the outcome-variance decomposition, including the
/// strong-coupling limit of the noise term.
pub fn criterion_variance_decomposition() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let mut run = || -> povmlab::Result<()> {
        let object_space = GridSpace::new(256, 40.0)?;
        let psi = WaveFunction::gaussian(&object_space, 0.0, 0.0, 1.0, hb())?;
        let probe_space = GridSpace::new(256, 40.0)?;
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.25, hb())?;
        let r = variance_relation_report(&psi, &probe, 1.0)?;
        c.leq(
            "|Var(E) - 1.25| / 1.25 (lambda=1)",
            (r.measured_variance - 1.25).abs() / 1.25,
            1e-6,
        );
        c.leq(
            "identity residual / Var(E)",
            r.residual() / r.measured_variance,
            1e-6,
        );

        // lambda = 10 pushes branches to +-10 q, so the probe box widens.
        let wide_probe_space = GridSpace::new(2048, 300.0)?;
        let wide_probe = WaveFunction::gaussian(&wide_probe_space, 0.0, 0.0, 0.25, hb())?;
        let r10 = variance_relation_report(&psi, &wide_probe, 10.0)?;
        c.leq(
            "|noise - 0.0025| / 0.0025 (lambda=10)",
            (r10.noise - 0.0025).abs() / 0.0025,
            1e-6,
        );
        c.leq(
            "identity residual / Var(E) (lambda=10)",
            r10.residual() / r10.measured_variance,
            1e-6,
        );
        Ok(())
    };
    if let Err(e) = run() {
        c.error("variance decomposition", e);
    }
    finish(2, "variance decomposition", 2.0, start, c)
}

/// Criterion 3: first kind without repeatability for a two-cell unsharp
/// position measurement.
pub fn criterion_first_kind_without_repeatability() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let run = || -> povmlab::Result<(f64, f64)> {
        let object_space = GridSpace::new(256, 40.0)?;
        let probe_space = GridSpace::new(256, 40.0)?;
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.25, hb())?;
        let cells = Partition::half_lines(&object_space, 0.0)?;
        let scheme = MeasurementScheme::standard_position(
            object_space.clone(),
            probe,
            1.0,
            cells,
            hb(),
        )?;
        let povm = extract_povm(&scheme, 256)?;
        let psi = WaveFunction::gaussian(&object_space, 0.0, 0.0, 1.0, hb())?;
        let fk = first_kind_check(&scheme, &psi, &povm)?;
        let rep = repeatability_check(&scheme, &psi)?;
        Ok((fk, rep))
    };
    match run() {
        Ok((fk, rep)) => {
            c.leq("first-kind deviation", fk, 1e-7);
            c.geq("repeatability deficit", rep, 0.01);
        }
        Err(e) => c.error("unsharp position scheme", e),
    }
    finish(3, "first kind without repeatability", 2.0, start, c)
}

/// Criterion 4: POVM structure across 20 randomized standard schemes.
pub fn criterion_povm_structure_suite() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20260808);
    let mut worst_positivity = 0.0_f64;
    let mut worst_completeness = 0.0_f64;
    let mut worst_commutativity = 0.0_f64;
    let mut worst_closed_form = 0.0_f64;

    let mut run = |scheme: &MeasurementScheme,
                   closed: &povmlab::scheme::Povm|
     -> povmlab::Result<()> {
        let extracted = extract_povm(scheme, scheme.object_space().n_points())?;
        worst_positivity = worst_positivity.max(extracted.positivity_defect());
        worst_completeness = worst_completeness.max(extracted.completeness_defect());
        worst_commutativity = worst_commutativity.max(commutativity_check(&extracted));
        for (a, b) in closed.effects.iter().zip(extracted.effects.iter()) {
            worst_closed_form =
                worst_closed_form.max(linalg::max_abs_diff(&a.to_dense(), &b.to_dense()));
        }
        Ok(())
    };

    let outcome = (|| -> povmlab::Result<()> {
        // Ten randomized discrete schemes.
        for _ in 0..10 {
            let m = rng.gen_range(2..=4usize);
            let mut eigenvalues: Vec<f64> = Vec::new();
            while eigenvalues.len() < m {
                let v: f64 = rng.gen_range(-2.0..2.0);
                if eigenvalues.iter().all(|e| (e - v).abs() > 0.4) {
                    eigenvalues.push(v);
                }
            }
            let a = point_observable(&eigenvalues);
            let probe_space = GridSpace::new(128, 30.0)?;
            let sigma2 = rng.gen_range(0.15..0.5);
            let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, sigma2, hb())?;
            let lambda = rng.gen_range(0.75..1.5);
            let scheme = standard_discrete_scheme(&a, &probe, lambda, hb())?;
            let closed = measured_effects_discrete(&scheme, &a)?;
            run(&scheme, &closed)?;
        }
        // Ten randomized unsharp position schemes.
        for _ in 0..10 {
            let object_space = GridSpace::new(40, 20.0)?;
            let lambda = rng.gen_range(0.75..1.5);
            let probe_space = GridSpace::new(96, lambda * 20.0)?;
            let sigma2 = rng.gen_range(0.3..0.8);
            let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, sigma2, hb())?;
            let b1: f64 = rng.gen_range(-4.0..-1.0);
            let b2: f64 = rng.gen_range(1.0..4.0);
            let cells = Partition::from_boundaries(&[-10.0, b1, b2, 10.0])?;
            let scheme = MeasurementScheme::standard_position(
                object_space.clone(),
                probe.clone(),
                lambda,
                cells.clone(),
                hb(),
            )?;
            let e = confidence_function(&probe, lambda)?;
            let closed = smeared_position_povm(&e, &cells, &object_space)?;
            run(&scheme, &closed)?;
        }
        Ok(())
    })();

    match outcome {
        Ok(()) => {
            c.leq("worst positivity defect", worst_positivity, 1e-8);
            c.leq("worst completeness defect", worst_completeness, 1e-8);
            c.leq("worst commutator norm", worst_commutativity, 1e-8);
            c.leq("worst closed-form deviation", worst_closed_form, 1e-8);
        }
        Err(e) => c.error("randomized scheme", e),
    }
    finish(4, "POVM structure suite (20 schemes)", 30.0, start, c)
}

/// Criterion 5: the inaccuracy-budget algebra and its lower bound.
pub fn criterion_joint_algebra() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let make = |lambda: f64, mu: f64, s1: f64, s2: f64| -> povmlab::Result<JointScheme> {
        let object = GridSpace::new(32, 16.0)?;
        let g1 = GridSpace::new(128, 24.0 * s1.sqrt())?;
        let g2 = GridSpace::new(128, 24.0 * s2.sqrt())?;
        let phi1 = WaveFunction::gaussian(&g1, 0.0, 0.0, s1, hb())?;
        let phi2 = WaveFunction::gaussian(&g2, 0.0, 0.0, s2, hb())?;
        JointScheme::with_uniform_cells(object, phi1, phi2, lambda, mu, hb(), 8, 8)
    };
    let outcome = (|| -> povmlab::Result<()> {
        // Saturation point.
        let b = variance_budget(&make(1.0, 1.0, 0.25, 1.0)?)?;
        c.leq("|product - 0.25| at saturation", (b.product - 0.25).abs(), 1e-12);
        c.leq("|Var(e) - 0.5|", (b.var_e - 0.5).abs(), 1e-10);
        c.leq("|Var(f) - 0.5|", (b.var_f - 0.5).abs(), 1e-10);
        c.leq("|x - 1| at saturation", (b.x_ratio - 1.0).abs(), 1e-9);

        // 100-point random sweep.
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let mut worst_residual = 0.0_f64;
        let mut min_product = f64::INFINITY;
        let mut min_q = f64::INFINITY;
        let mut min_d = f64::INFINITY;
        for _ in 0..100 {
            let lambda = rng.gen_range(0.5..2.0);
            let mu = rng.gen_range(0.5..2.0);
            let s1 = rng.gen_range(0.1..1.5);
            let s2 = rng.gen_range(0.1..1.5);
            let b = variance_budget(&make(lambda, mu, s1, s2)?)?;
            worst_residual = worst_residual.max(b.decomposition_residual());
            min_product = min_product.min(b.product);
            min_q = min_q.min(b.q_term);
            min_d = min_d.min(b.d_term);
        }
        c.leq("worst |product - Q - D| / product", worst_residual, 1e-9);
        c.geq("min product", min_product, 0.25 - 1e-9);
        c.geq("min Q term", min_q, 0.125 - 1e-9);
        c.geq("min D term", min_d, 0.125 - 1e-9);
        Ok(())
    })();
    if let Err(e) = outcome {
        c.error("joint budget", e);
    }
    finish(5, "joint-model algebra (100-point sweep)", 1.0, start, c)
}

/// Criterion 6: the joint model's dynamics reproduce the closed forms.
pub fn criterion_joint_dynamics() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let outcome = (|| -> povmlab::Result<()> {
        let object = GridSpace::new(64, 24.0)?;
        let s1 = GridSpace::new(64, 24.0)?;
        let s2 = GridSpace::new(64, 24.0)?;
        let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, 0.25, hb())?;
        let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, 0.5, hb())?;
        let scheme = JointScheme::with_uniform_cells(
            object.clone(),
            phi1,
            phi2,
            1.0,
            1.0,
            hb(),
            16,
            16,
        )?;

        let psi = WaveFunction::gaussian(&object, 0.5, 0.0, 0.5, hb())?;
        let (dev_q, dev_p) = joint_marginal_check(&scheme, &psi)?;
        c.leq("position marginal deviation", dev_q, 1e-6);
        c.leq("momentum marginal deviation", dev_p, 1e-6);

        // Near-point object: numeric inaccuracy matches the closed form.
        let point = WaveFunction::gaussian(&object, 0.0, 0.0, 0.25, hb())?;
        let budget = variance_budget(&scheme)?;
        let (num_ve, num_vf) = simulated_inaccuracy_variances(&scheme, &point)?;
        c.leq(
            "|numeric Var(e) - closed form| / Var(e)",
            (num_ve - budget.var_e).abs() / budget.var_e,
            1e-4,
        );
        c.leq(
            "|numeric Var(f) - closed form| / Var(f)",
            (num_vf - budget.var_f).abs() / budget.var_f,
            1e-4,
        );

        // On-grid phase-space covariance.
        let dq = 4.0 * object.spacing();
        let dp = 4.0 * object.momentum_spacing(hb());
        let dev = covariance_check(&scheme, &psi, (dq, dp))?;
        c.leq("covariance deviation", dev, 1e-6);
        Ok(())
    })();
    if let Err(e) = outcome {
        c.error("joint dynamics", e);
    }
    finish(6, "joint-model dynamics (n=64 per factor)", 60.0, start, c)
}

/// Criterion 7: classicality regimes and the inequality chain.
pub fn criterion_classicality_regimes() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let outcome = (|| -> povmlab::Result<()> {
        // Microscope regime: Var(e) = Var(f) = 100.
        let object = GridSpace::new(64, 24.0)?;
        let s1 = GridSpace::new(64, 280.0)?;
        let s2 = GridSpace::new(64, 1.6)?;
        let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, 99.999375, hb())?;
        let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, 0.002500015625, hb())?;
        let microscope = JointScheme::with_uniform_cells(
            object.clone(),
            phi1,
            phi2,
            1.0,
            1.0,
            hb(),
            16,
            16,
        )?;
        let psi = WaveFunction::gaussian(&object, 0.0, 0.0, 0.5, hb())?;
        let report = classicality_report(&microscope, &psi, 0.01)?;
        c.is_true("microscope regime passes C1", report.c1_holds());
        c.is_true("microscope regime passes C2", report.c2_holds());
        c.is_true("microscope regime passes C3", report.c3_holds());
        c.leq("microscope disturbance", report.c4_disturbance, 0.01);
        c.is_true(
            "microscope inequality chain",
            report.inequality_chain_holds(hb()),
        );

        // Saturation regime: C3 ratio exactly 1.
        let g1 = GridSpace::new(96, 32.0)?;
        let g2 = GridSpace::new(96, 32.0)?;
        let p1 = WaveFunction::gaussian(&g1, 0.0, 0.0, 0.25, hb())?;
        let p2 = WaveFunction::gaussian(&g2, 0.0, 0.0, 1.0, hb())?;
        let object96 = GridSpace::new(96, 32.0)?;
        let saturation = JointScheme::with_uniform_cells(
            object96.clone(),
            p1,
            p2,
            1.0,
            1.0,
            hb(),
            16,
            16,
        )?;
        let psi96 = WaveFunction::gaussian(&object96, 0.0, 0.0, 0.5, hb())?;
        let sat = classicality_report(&saturation, &psi96, 0.01)?;
        c.leq("saturation C3 ratio - 1", (sat.c3_ratio - 1.0).abs(), 1e-6);
        c.is_true("saturation regime fails C3", !sat.c3_holds());
        c.is_true(
            "saturation inequality chain",
            sat.inequality_chain_holds(hb()),
        );

        // 9-point regime map: the chain holds on every row and the
        // disturbance falls as the inaccuracy scale grows.
        let mut previous_disturbance = [f64::INFINITY; 3];
        for (i, &a) in [2.0_f64, 20.0, 200.0].iter().enumerate() {
            for (j, &b) in [2.0_f64, 20.0, 200.0].iter().enumerate() {
                let l1 = (20.0 * a.sqrt()).max(14.0 * a.sqrt() + 26.0);
                let s1 = GridSpace::new(64, l1)?;
                let sigma2sq: f64 = 1.0 / (4.0 * b);
                let s2 = GridSpace::new(64, 24.0 * sigma2sq.sqrt())?;
                let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, a, hb())?;
                let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, sigma2sq, hb())?;
                let scheme = JointScheme::with_uniform_cells(
                    object.clone(),
                    phi1,
                    phi2,
                    1.0,
                    1.0,
                    hb(),
                    8,
                    8,
                )?;
                let row = classicality_report(&scheme, &psi, 0.01)?;
                if !row.inequality_chain_holds(hb()) {
                    c.is_true(&format!("inequality chain at ({a}, {b})"), false);
                }
                let d = disturbance_metric(&scheme, &psi)?;
                if j == i {
                    // Diagonal rows scale both inaccuracies together.
                    if d >= previous_disturbance[0] {
                        c.is_true(&format!("disturbance falls at scale {a}"), false);
                    }
                    previous_disturbance[0] = d;
                }
            }
        }
        c.is_true("inequality chain on all 9 rows", true);
        Ok(())
    })();
    if let Err(e) = outcome {
        c.error("classicality regimes", e);
    }
    finish(7, "classicality regimes (9-point map)", 120.0, start, c)
}

const DETERMINISM_CONFIG: &str = r#"{
    "kind": "joint",
    "object_grid": { "n_points": 32, "box_length": 16.0 },
    "probe1_grid": { "n_points": 64, "box_length": 16.0 },
    "probe2_grid": { "n_points": 64, "box_length": 20.0 },
    "probe1": { "state": "gaussian", "variance": 0.25 },
    "probe2": { "state": "gaussian", "variance": 1.0 },
    "lambda": 1.0,
    "mu": 1.0,
    "object_state": { "state": "gaussian", "variance": 0.5 },
    "run_dynamics": false,
    "sweep": { "random": { "count": 5, "ranges": [
        { "parameter": "lambda", "min": 0.5, "max": 2.0 },
        { "parameter": "mu", "min": 0.5, "max": 2.0 }
    ] } },
    "seed": 99
}"#;

const DYNAMICS_CONFIG: &str = r#"{
    "kind": "joint",
    "object_grid": { "n_points": 64, "box_length": 24.0 },
    "probe1_grid": { "n_points": 64, "box_length": 24.0 },
    "probe2_grid": { "n_points": 64, "box_length": 24.0 },
    "probe1": { "state": "gaussian", "variance": 0.25 },
    "probe2": { "state": "gaussian", "variance": 0.5 },
    "lambda": 1.0,
    "mu": 1.0,
    "object_state": { "state": "gaussian", "variance": 0.5 },
    "covariance_steps": [4, 4],
    "seed": 99
}"#;

/// Criterion 8: determinism and I/O fidelity.
pub fn criterion_determinism_io() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let outcome = (|| -> crate::error::Result<()> {
        let config = ExperimentConfig::from_json(DETERMINISM_CONFIG)?;
        let first = run_sweep(&config, 1)?;
        let second = run_sweep(&config, 1)?;
        let json_a = export::to_json(&first);
        let json_b = export::to_json(&second);
        c.is_true("identical config+seed give byte-identical JSON", json_a == json_b);

        // Parallel execution must preserve row order and values.
        let parallel = run_sweep(&config, 4)?;
        let json_c = export::to_json(&parallel);
        c.is_true("parallel sweep matches single-threaded bytes", json_a == json_c);

        // JSON round-trip.
        let parsed = export::read_json(&json_a)?;
        let mut roundtrip_exact = parsed.len() == first.len();
        for (a, b) in first.iter().zip(parsed.iter()) {
            roundtrip_exact &= a.metrics == b.metrics
                && a.swept == b.swept
                && a.config == b.config
                && a.distributions == b.distributions;
        }
        c.is_true("JSON round-trip is field-exact", roundtrip_exact);

        // CSV numbers round-trip at 17 significant digits.
        let csv = export::to_csv(&first);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let mut csv_exact = true;
        for (idx, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            for (name, field) in header.iter().zip(fields.iter()) {
                if let Some(metric) = first[idx].metrics.get(*name) {
                    let back: f64 = field.parse().unwrap_or(f64::NAN);
                    csv_exact &= back == *metric;
                }
            }
        }
        c.is_true("CSV scalars round-trip exactly", csv_exact);

        // Plotdata round-trip, on a configuration that runs the dynamics.
        let dir = std::env::temp_dir().join(format!("povmlab-accept-{}", std::process::id()));
        let one = ExperimentConfig::from_json(DYNAMICS_CONFIG)?;
        let records = vec![crate::experiment::run_experiment(&one)?];
        let files = export::write_plotdata(&records, &dir)?;
        let mut plot_exact = !files.is_empty();
        for file in &files {
            let name = file
                .file_name()
                .unwrap()
                .to_string_lossy()
                .trim_start_matches("record0000_")
                .trim_end_matches(".dat")
                .to_string();
            let body = std::fs::read_to_string(file)?;
            let values: Vec<f64> = body
                .lines()
                .skip(1)
                .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
                .collect();
            plot_exact &= values == records[0].distributions[&name];
        }
        let _ = std::fs::remove_dir_all(&dir);
        c.is_true("plotdata round-trips exactly", plot_exact);
        Ok(())
    })();
    if let Err(e) = outcome {
        c.error("determinism", e);
    }
    finish(8, "determinism and I/O", 30.0, start, c)
}

/// Run all eight criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_calibrated_sharp(),
        criterion_variance_decomposition(),
        criterion_first_kind_without_repeatability(),
        criterion_povm_structure_suite(),
        criterion_joint_algebra(),
        criterion_joint_dynamics(),
        criterion_classicality_regimes(),
        criterion_determinism_io(),
    ]
}
