//! Quasi-classical regime diagnostics for joint schemes.
//!
//! Four conditions characterize a measurement that behaves classically:
//! the object is localized relative to the instrument resolution (C1), the
//! two pointer readouts barely disturb each other (C2), the inaccuracy
//! product dwarfs `hbar^2/4` (C3), and localized states pass through nearly
//! undisturbed (C4).  Every "much smaller than" is reported as a raw ratio
//! against a configurable threshold so conclusions never hinge on a default.

use crate::error::{LabError, Result};
use crate::hbar::PlanckConstant;
use crate::joint::{
    coverage_probability, joint_confidence_functions, probe_moments, reduced_object_state,
    undisturbed_confidence_functions, variance_budget, JointScheme,
};
use crate::operator::{moments, HermitianOperator};
use crate::state::WaveFunction;

/// Ratios and metrics of the four classicality conditions.
#[derive(Debug, Clone)]
pub struct ClassicalityReport {
    /// `Var(Q, psi) / Var(e)` and `Var(P, psi) / Var(f)`.
    pub c1_ratios: (f64, f64),
    /// Noise-to-signal ratios of the mutual disturbance: second over first
    /// term of each confidence variance.
    pub c2_ratios: (f64, f64),
    /// `hbar^2 / (4 Var(e) Var(f))`.
    pub c3_ratio: f64,
    /// `1 - <psi| T(psi) |psi>`: fidelity deficit of the unconditional
    /// post-measurement state.
    pub c4_disturbance: f64,
    /// `(<Q>, <P>)` of the object state.
    pub true_values: (f64, f64),
    /// Threshold used when flagging the "much smaller than" conditions.
    pub epsilon: f64,
    pub var_e: f64,
    pub var_f: f64,
    /// Undisturbed inaccuracies with the other coupling switched off.
    pub var_e_undisturbed: f64,
    pub var_f_undisturbed: f64,
    /// `(hbar^2/4) / (Var(Q, psi) Var(P, psi))`: the constant relating C1 to
    /// C3 through the object's own uncertainty relation.
    pub c1_to_c3_constant: f64,
    /// Probability of the outcome landing within `n` confidence widths of
    /// the true values, for `n = 1, 2, 3`.
    pub coverage: [f64; 3],
}

impl ClassicalityReport {
    pub fn c1_holds(&self) -> bool {
        self.c1_ratios.0 <= self.epsilon && self.c1_ratios.1 <= self.epsilon
    }

    pub fn c2_holds(&self) -> bool {
        self.c2_ratios.0 <= self.epsilon && self.c2_ratios.1 <= self.epsilon
    }

    pub fn c3_holds(&self) -> bool {
        self.c3_ratio <= self.epsilon
    }

    pub fn c4_holds(&self) -> bool {
        self.c4_disturbance <= self.epsilon
    }

    /// The inequality chain `Var(e) Var(f) >= Var(e_o) Var(f_o)`, and, when
    /// C2 holds at level epsilon, `Var(e_o) Var(f_o) >= hbar^2 / (16 epsilon)`.
    pub fn inequality_chain_holds(&self, hbar: PlanckConstant) -> bool {
        let lhs = self.var_e * self.var_f;
        let mid = self.var_e_undisturbed * self.var_f_undisturbed;
        if lhs < mid * (1.0 - 1e-12) {
            return false;
        }
        if self.c2_holds() {
            let h2 = hbar.value() * hbar.value();
            let bound = h2 / (16.0 * self.epsilon);
            if mid < bound * (1.0 - 1e-9) {
                return false;
            }
        }
        true
    }
}

/// Evaluate the classicality conditions on a configured joint scheme.
pub fn classicality_report(
    scheme: &JointScheme,
    object_state: &WaveFunction,
    epsilon: f64,
) -> Result<ClassicalityReport> {
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let budget = variance_budget(scheme)?;
    let m = probe_moments(scheme)?;
    let (e, f) = joint_confidence_functions(scheme)?;
    let (e_o, f_o) = undisturbed_confidence_functions(scheme)?;

    let space = scheme.object_space();
    let q_op = HermitianOperator::position(space);
    let p_op = HermitianOperator::momentum(space, scheme.hbar());
    let (q_mean, q_var) = moments(&q_op, object_state)?;
    let (p_mean, p_var) = moments(&p_op, object_state)?;

    let l2 = scheme.lambda() * scheme.lambda();
    let u2 = scheme.mu() * scheme.mu();
    let c2_position = (u2 / 4.0 * m.var_q2) / (m.var_q1 / l2);
    let c2_momentum = (l2 / 4.0 * m.var_p1) / (m.var_p2 / u2);

    let h = scheme.hbar().value();
    let c3_ratio = h * h / (4.0 * budget.var_e * budget.var_f);
    let c4_disturbance = disturbance_metric(scheme, object_state)?;
    let c1_to_c3_constant = h * h / 4.0 / (q_var * p_var);

    let mut coverage = [0.0; 3];
    for (idx, n) in [1.0, 2.0, 3.0].iter().enumerate() {
        coverage[idx] =
            coverage_probability(scheme, object_state, (q_mean, p_mean), *n)?;
    }

    Ok(ClassicalityReport {
        c1_ratios: (q_var / e.variance(), p_var / f.variance()),
        c2_ratios: (c2_position, c2_momentum),
        c3_ratio,
        c4_disturbance,
        true_values: (q_mean, p_mean),
        epsilon,
        var_e: e.variance(),
        var_f: f.variance(),
        var_e_undisturbed: e_o.variance(),
        var_f_undisturbed: f_o.variance(),
        c1_to_c3_constant,
        coverage,
    })
}

/// `1 - <psi| T(psi) |psi>`, the fidelity deficit of the unconditional
/// post-measurement object state.
pub fn disturbance_metric(scheme: &JointScheme, object_state: &WaveFunction) -> Result<f64> {
    let t_state = reduced_object_state(scheme, object_state)?;
    let fidelity = t_state.fidelity_pure(object_state);
    Ok((1.0 - fidelity).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpace;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn hb() -> PlanckConstant {
        PlanckConstant::default()
    }

    /// Large-inaccuracy ("microscope") scheme: Var(e) = Var(f) = 100.
    fn microscope_scheme() -> JointScheme {
        // sigma1^2 ~= 100 (wide probe-1 position), sigma2^2 ~= 1/400
        // (sharp probe-2 position, wide momentum), lambda = mu = 1.
        let object = GridSpace::new(64, 24.0).unwrap();
        let s1 = GridSpace::new(64, 280.0).unwrap();
        let s2 = GridSpace::new(64, 1.6).unwrap();
        let var1 = 99.999375;
        let var2 = 0.002500015625;
        let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, var1, hb()).unwrap();
        let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, var2, hb()).unwrap();
        JointScheme::with_uniform_cells(object, phi1, phi2, 1.0, 1.0, hb(), 16, 16).unwrap()
    }

    /// Minimal-probe scheme saturating the inaccuracy bound.
    fn precision_scheme() -> JointScheme {
        let object = GridSpace::new(96, 32.0).unwrap();
        let s1 = GridSpace::new(96, 32.0).unwrap();
        let s2 = GridSpace::new(96, 32.0).unwrap();
        let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, 0.25, hb()).unwrap();
        let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, 1.0, hb()).unwrap();
        JointScheme::with_uniform_cells(object, phi1, phi2, 1.0, 1.0, hb(), 16, 16).unwrap()
    }

    #[test]
    fn microscope_regime_is_classical() {
        let scheme = microscope_scheme();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 0.5, hb()).unwrap();
        let r = classicality_report(&scheme, &psi, 0.01).unwrap();
        assert_abs_diff_eq!(r.var_e, 100.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.var_f, 100.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.c1_ratios.0, 0.005, epsilon = 1e-5);
        assert_abs_diff_eq!(r.c1_ratios.1, 0.005, epsilon = 1e-5);
        assert_abs_diff_eq!(r.c3_ratio, 2.5e-5, epsilon = 1e-8);
        assert!(r.c1_holds() && r.c2_holds() && r.c3_holds());
        assert!(r.c4_disturbance < 0.01, "disturbance {}", r.c4_disturbance);
        assert!(r.inequality_chain_holds(hb()));
    }

    #[test]
    fn precision_regime_fails_c3() {
        let scheme = precision_scheme();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 0.5, hb()).unwrap();
        let r = classicality_report(&scheme, &psi, 0.01).unwrap();
        assert_abs_diff_eq!(r.c3_ratio, 1.0, epsilon = 1e-6);
        assert!(!r.c3_holds());
        assert!(r.inequality_chain_holds(hb()));
    }

    #[test]
    fn degenerate_couplings_are_rejected_at_construction() {
        let object = GridSpace::new(32, 16.0).unwrap();
        let s = GridSpace::new(32, 16.0).unwrap();
        let phi = WaveFunction::gaussian(&s, 0.0, 0.0, 0.5, hb()).unwrap();
        let err = JointScheme::with_uniform_cells(
            object,
            phi.clone(),
            phi,
            0.0,
            1.0,
            hb(),
            8,
            8,
        );
        assert!(matches!(err, Err(crate::error::LabError::InvalidScheme(_))));
    }

    #[test]
    fn c1_implies_c3_through_the_reported_constant() {
        let scheme = microscope_scheme();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 0.5, hb()).unwrap();
        let eps = 0.01;
        let r = classicality_report(&scheme, &psi, eps).unwrap();
        assert!(r.c1_holds());
        // c3 <= kappa * (c1_q * c1_p) <= kappa * eps^2 with kappa <= 1.
        assert!(r.c1_to_c3_constant <= 1.0 + 1e-9);
        assert!(r.c3_ratio <= r.c1_to_c3_constant * r.c1_ratios.0 * r.c1_ratios.1 * (1.0 + 1e-9));
        assert!(r.c3_ratio <= r.c1_to_c3_constant * eps * eps * (1.0 + 1e-9));
    }

    #[test]
    fn disturbance_shrinks_as_inaccuracies_grow() {
        // Sweep the probe-1 width up by 10x steps: C1/C2 ratios fall, and the
        // disturbance metric must fall strictly alongside.
        let object = GridSpace::new(48, 24.0).unwrap();
        let psi = WaveFunction::gaussian(&object, 0.0, 0.0, 0.5, hb()).unwrap();
        let mut last = f64::INFINITY;
        for (l1, var1) in [(60.0, 4.0), (200.0, 40.0), (600.0, 400.0)] {
            let s1 = GridSpace::new(64, l1).unwrap();
            let s2 = GridSpace::new(64, 24.0).unwrap();
            let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, var1, hb()).unwrap();
            let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, 1.0, hb()).unwrap();
            let scheme = JointScheme::with_uniform_cells(
                object.clone(),
                phi1,
                phi2,
                1.0,
                1.0,
                hb(),
                8,
                8,
            )
            .unwrap();
            let d = disturbance_metric(&scheme, &psi).unwrap();
            assert!(d < last - 1e-9, "disturbance {d} did not drop below {last}");
            last = d;
        }
    }

    #[test]
    fn precision_regime_disturbs_superpositions() {
        let scheme = precision_scheme();
        let object = scheme.object_space().clone();
        // Superposition of two displaced wavepackets.
        let a = WaveFunction::gaussian(&object, -2.0, 0.0, 0.25, hb()).unwrap();
        let b = WaveFunction::gaussian(&object, 2.0, 0.0, 0.25, hb()).unwrap();
        let mut samples: Vec<Complex64> = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes().iter())
            .map(|(x, y)| x + y)
            .collect();
        let norm: f64 = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
            * object.spacing())
        .sqrt();
        samples.iter_mut().for_each(|z| *z /= norm);
        let psi = WaveFunction::from_samples(object, samples).unwrap();
        let d = disturbance_metric(&scheme, &psi).unwrap();
        assert!(d > 0.1, "superposition disturbance {d}");
    }

    #[test]
    fn disturbance_is_phase_invariant() {
        let scheme = precision_scheme();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.5, 0.0, 0.5, hb()).unwrap();
        let d1 = disturbance_metric(&scheme, &psi).unwrap();
        let phase = Complex64::from_polar(1.0, 1.234);
        let samples: Vec<Complex64> = psi.amplitudes().iter().map(|z| z * phase).collect();
        let psi2 = WaveFunction::from_samples(scheme.object_space().clone(), samples).unwrap();
        let d2 = disturbance_metric(&scheme, &psi2).unwrap();
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-12);
    }

    #[test]
    fn coverage_bands_are_reported_and_ordered() {
        let scheme = precision_scheme();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.5, 0.0, 0.5, hb()).unwrap();
        let r = classicality_report(&scheme, &psi, 0.01).unwrap();
        assert!(r.coverage[0] > 0.2);
        assert!(r.coverage[0] < r.coverage[1]);
        assert!(r.coverage[1] < r.coverage[2]);
        assert!(r.coverage[2] <= 1.0 + 1e-9);
        assert_abs_diff_eq!(r.true_values.0, 0.5, epsilon = 1e-9);
    }
}
