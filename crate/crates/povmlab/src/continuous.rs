//! The unsharp position measurement.
//!
//! Coupling the object position to a probe and reading the probe position
//! measures not sharp position but a smeared version of it: each effect is
//! `(chi_X * e)(Q)` where the confidence function `e(x) = lambda |phi(-lambda x)|^2`
//! is set by the probe preparation and the coupling strength.  The outcome
//! variance decomposes as `Var(E, psi) = Var(Q, psi) + Var(Q1, phi)/lambda^2`:
//! the noise term shrinks with stronger coupling or narrower probes but
//! never vanishes.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::fourier::CellIntegrator;
use crate::grid::{GridSpace, Partition};
use crate::hbar::PlanckConstant;
use crate::operator::{moments, HermitianOperator};
use crate::scheme::{Effect, MeasurementScheme, Povm};
use crate::state::WaveFunction;

/// A probability density on a value grid, with cached moments.
#[derive(Debug, Clone)]
pub struct ConfidenceFunction {
    space: GridSpace,
    density: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl ConfidenceFunction {
    /// Wrap a sampled density; it must integrate to 1 within 1e-8.
    pub fn from_samples(space: GridSpace, density: Vec<f64>) -> Result<Self> {
        if density.len() != space.n_points() {
            return Err(LabError::SpaceMismatch(format!(
                "{} samples on a {}-point grid",
                density.len(),
                space.n_points()
            )));
        }
        if let Some(&bad) = density.iter().find(|&&d| d < -1e-12) {
            return Err(LabError::InvalidArgument(format!(
                "density has negative entry {bad:.3e}"
            )));
        }
        let h = space.spacing();
        let total: f64 = density.iter().sum::<f64>() * h;
        if (total - 1.0).abs() > 1e-8 {
            return Err(LabError::InvalidArgument(format!(
                "density integrates to {total}, expected 1"
            )));
        }
        let mean: f64 = density
            .iter()
            .enumerate()
            .map(|(k, &d)| space.position(k) * d)
            .sum::<f64>()
            * h;
        let second: f64 = density
            .iter()
            .enumerate()
            .map(|(k, &d)| space.position(k).powi(2) * d)
            .sum::<f64>()
            * h;
        let variance = (second - mean * mean).max(0.0);
        Ok(ConfidenceFunction {
            space,
            density,
            mean,
            variance,
        })
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn integrator(&self) -> CellIntegrator {
        CellIntegrator::from_density(&self.density, &self.space)
    }
}

/// The confidence function `e(x) = lambda |phi(-lambda x)|^2` of a standard
/// position scheme with probe `phi` and coupling `lambda`.
///
/// The density lives on the reflected, rescaled probe grid (spacing
/// `dxi / lambda`); with the analytic probe profile available it is sampled
/// exactly, otherwise by reindexing the probe samples.
pub fn confidence_function(probe_state: &WaveFunction, lambda: f64) -> Result<ConfidenceFunction> {
    if !(lambda > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    if probe_state.n_factors() != 1 {
        return Err(LabError::InvalidArgument(
            "probe state must live on a single grid".into(),
        ));
    }
    let probe_space = probe_state.space(0);
    let n = probe_space.n_points();
    let value_space = GridSpace::new(n, probe_space.box_length() / lambda)?;
    let mut density: Vec<f64> = match probe_state.profile() {
        Some(p) => value_space
            .positions()
            .iter()
            .map(|&v| lambda * p.density(-lambda * v))
            .collect(),
        None => {
            // -lambda v_m lands exactly on probe sample (n - m) mod n.
            let samples: Vec<f64> = probe_state
                .amplitudes()
                .iter()
                .map(|z| z.norm_sqr())
                .collect();
            (0..n).map(|m| lambda * samples[(n - m) % n]).collect()
        }
    };
    // The sampled density is a probability density on its own grid; snap the
    // quadrature normalization (noticeable only for barely-resolved bumps).
    let total: f64 = density.iter().sum::<f64>() * value_space.spacing();
    density.iter_mut().for_each(|d| *d /= total);
    ConfidenceFunction::from_samples(value_space, density)
}

/// The smeared position POVM `X -> (chi_X * e)(Q)` over a partition.
///
/// Effects are diagonal in position with entries
/// `int_{x_k - hi}^{x_k - lo} e(u) du`, clipped to `[0, 1]`.  The partition
/// must cover the object grid range and span the pointer range (the
/// confidence function's own box), otherwise the family cannot sum to the
/// identity.
pub fn smeared_position_povm(
    e: &ConfidenceFunction,
    partition: &Partition,
    object_space: &GridSpace,
) -> Result<Povm> {
    let half = object_space.box_length() / 2.0;
    partition.check_covers(-half, half, 1e-9 * object_space.box_length())?;
    let span = partition.cells()[partition.len() - 1].hi - partition.cells()[0].lo;
    let need = e.space().box_length();
    if (span - need).abs() > 1e-6 * need {
        return Err(LabError::Coverage(format!(
            "partition spans {span}, confidence circle is {need}"
        )));
    }
    let integ = e.integrator();
    let effects: Vec<Effect> = partition
        .cells()
        .iter()
        .map(|cell| {
            let diag: Array1<f64> = Array1::from_iter(object_space.positions().iter().map(|&x| {
                let v = integ.mass(x - cell.hi, x - cell.lo);
                v.clamp(0.0, 1.0)
            }));
            Effect::Diagonal(diag)
        })
        .collect();
    let pointer_values = partition.cells().iter().map(|c| c.midpoint()).collect();
    Ok(Povm {
        cells: partition.clone(),
        pointer_values,
        effects,
    })
}

/// The `Var(E) = Var(Q) + Var(Q1)/lambda^2` decomposition, with every term
/// measured numerically.
#[derive(Debug, Clone, Copy)]
pub struct VarianceRelationReport {
    /// Variance of the simulated outcome distribution on the value axis.
    pub measured_variance: f64,
    /// Position variance of the object state.
    pub object_variance: f64,
    /// `Var(Q1, phi) / lambda^2`: the probe noise term.
    pub noise: f64,
}

impl VarianceRelationReport {
    /// `|Var(E) - Var(Q) - noise|`, the decomposition residual.
    pub fn residual(&self) -> f64 {
        (self.measured_variance - self.object_variance - self.noise).abs()
    }
}

/// Simulate the standard position scheme and report the variance
/// decomposition of its outcome distribution.
pub fn variance_relation_report(
    object_state: &WaveFunction,
    probe_state: &WaveFunction,
    lambda: f64,
) -> Result<VarianceRelationReport> {
    if !(lambda > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    object_state.check_localized("object state")?;
    probe_state.check_localized("probe state")?;
    let object_space = object_state.space(0);
    let probe_space = probe_state.space(0);
    let q_obj = HermitianOperator::position(object_space);
    let (_, object_variance) = moments(&q_obj, object_state)?;
    let q_probe = HermitianOperator::position(probe_space);
    let (_, probe_var) = moments(&q_probe, probe_state)?;
    let noise = probe_var / (lambda * lambda);

    // Pointer density of the evolved state: rho_Z(xi) = sum_k |c_k|^2
    // |phi(xi - lambda q_k)|^2, rescaled to the value axis by 1/lambda.
    let dq = object_space.spacing();
    let weights: Vec<f64> = object_state
        .amplitudes()
        .iter()
        .map(|z| z.norm_sqr() * dq)
        .collect();
    let positions = object_space.positions();
    let np = probe_space.n_points();
    let mut pointer_density = vec![0.0; np];
    match probe_state.profile() {
        Some(p) => {
            for (k, &w) in weights.iter().enumerate() {
                if w < 1e-300 {
                    continue;
                }
                let shifted = p.shifted(lambda * positions[k]);
                for (m, d) in pointer_density.iter_mut().enumerate() {
                    *d += w * shifted.density(probe_space.position(m));
                }
            }
        }
        None => {
            let samples: Vec<Complex64> = probe_state.amplitudes().iter().copied().collect();
            for (k, &w) in weights.iter().enumerate() {
                if w < 1e-300 {
                    continue;
                }
                let shifted = crate::fourier::shift(&samples, probe_space, lambda * positions[k]);
                for (m, d) in pointer_density.iter_mut().enumerate() {
                    *d += w * shifted[m].norm_sqr();
                }
            }
        }
    }
    let dxi = probe_space.spacing();
    let total: f64 = pointer_density.iter().sum::<f64>() * dxi;
    let mean_z: f64 = pointer_density
        .iter()
        .enumerate()
        .map(|(m, &d)| probe_space.position(m) * d)
        .sum::<f64>()
        * dxi
        / total;
    let second_z: f64 = pointer_density
        .iter()
        .enumerate()
        .map(|(m, &d)| probe_space.position(m).powi(2) * d)
        .sum::<f64>()
        * dxi
        / total;
    let var_z = second_z - mean_z * mean_z;
    Ok(VarianceRelationReport {
        measured_variance: var_z / (lambda * lambda),
        object_variance,
        noise,
    })
}

/// Convenience constructor for the standard position scheme whose POVM the
/// closed forms above describe.
pub fn standard_position_scheme(
    object_space: &GridSpace,
    probe_state: &WaveFunction,
    lambda: f64,
    cells: Partition,
    hbar: PlanckConstant,
) -> Result<MeasurementScheme> {
    MeasurementScheme::standard_position(
        object_space.clone(),
        probe_state.clone(),
        lambda,
        cells,
        hbar,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::normal_cdf;
    use crate::scheme::{extract_povm, pointer_statistics};
    use approx::assert_abs_diff_eq;

    fn hb() -> PlanckConstant {
        PlanckConstant::default()
    }

    #[test]
    fn gaussian_confidence_function_moments() {
        let probe_space = GridSpace::new(256, 40.0).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 1.0, hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        assert_abs_diff_eq!(e.variance(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(e.mean(), 0.0, epsilon = 1e-10);
        let total: f64 = e.density().iter().sum::<f64>() * e.space().spacing();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);

        // lambda scaling: Var(e) = Var(Q1, phi) / lambda^2.
        let e2 = confidence_function(&probe, 2.0).unwrap();
        assert_abs_diff_eq!(e2.variance(), 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(
            e2.space().spacing(),
            probe_space.spacing() / 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn reflection_convention_shows_in_asymmetric_probes() {
        // Probe centered at +c: e is centered at -c/lambda.
        let probe_space = GridSpace::new(256, 40.0).unwrap();
        let c = 1.5;
        let probe = WaveFunction::gaussian(&probe_space, c, 0.0, 0.5, hb()).unwrap();
        let lambda = 2.0;
        let e = confidence_function(&probe, lambda).unwrap();
        assert_abs_diff_eq!(e.mean(), -c / lambda, epsilon = 1e-8);

        // A sampled (profile-free) probe must give the same reflection.
        let samples: Vec<Complex64> = probe.amplitudes().iter().copied().collect();
        let raw = WaveFunction::from_samples(probe_space.clone(), samples).unwrap();
        let e_raw = confidence_function(&raw, lambda).unwrap();
        assert_abs_diff_eq!(e_raw.mean(), -c / lambda, epsilon = 1e-8);
        for (a, b) in e.density().iter().zip(e_raw.density().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_bump_confidence_function_is_even() {
        let probe_space = GridSpace::new(256, 40.0).unwrap();
        let probe = WaveFunction::bump(&probe_space, 0.0, 1.0).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        assert_abs_diff_eq!(e.mean(), 0.0, epsilon = 1e-10);
        let d = e.density();
        let n = d.len();
        for m in 1..n {
            assert!((d[m] - d[(n - m) % n]).abs() < 1e-10);
        }
    }

    #[test]
    fn smeared_effect_diagonal_is_gaussian_tail() {
        // X = (-inf, 0] truncated to the box: the effect diagonal at x is
        // the upper Gaussian tail P(e >= x).
        let object_space = GridSpace::new(256, 40.0).unwrap();
        let probe_space = GridSpace::new(256, 40.0).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 1.0, hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let partition = Partition::half_lines(&object_space, 0.0).unwrap();
        let povm = smeared_position_povm(&e, &partition, &object_space).unwrap();
        let left = match &povm.effects[0] {
            Effect::Diagonal(d) => d.clone(),
            _ => panic!("diagonal expected"),
        };
        for (k, &x) in object_space.positions().iter().enumerate() {
            if x.abs() > 12.0 {
                continue; // box-edge truncation region
            }
            let want = 1.0 - normal_cdf(x);
            assert!((left[k] - want).abs() < 1e-8, "x={x}: {} vs {want}", left[k]);
        }
        povm.validate(1e-8).unwrap();
    }

    #[test]
    fn full_line_cell_gives_identity_effect() {
        let object_space = GridSpace::new(128, 30.0).unwrap();
        let probe = WaveFunction::gaussian(&object_space, 0.0, 0.0, 0.8, hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let partition = Partition::uniform_cover(&object_space, 1).unwrap();
        let povm = smeared_position_povm(&e, &partition, &object_space).unwrap();
        match &povm.effects[0] {
            Effect::Diagonal(d) => {
                for &v in d.iter() {
                    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
                }
            }
            _ => panic!("diagonal expected"),
        }
    }

    #[test]
    fn partition_gap_is_a_coverage_error() {
        let object_space = GridSpace::new(64, 16.0).unwrap();
        let probe = WaveFunction::gaussian(&object_space, 0.0, 0.0, 0.5, hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let gappy = Partition::new(vec![
            crate::grid::Interval::new(-8.0, -1.0),
            crate::grid::Interval::new(1.0, 8.0),
        ])
        .unwrap();
        assert!(matches!(
            smeared_position_povm(&e, &gappy, &object_space),
            Err(LabError::Coverage(_))
        ));
    }

    #[test]
    fn narrow_probe_approaches_sharp_indicators() {
        let object_space = GridSpace::new(256, 40.0).unwrap();
        let probe_space = GridSpace::new(1024, 40.0).unwrap();
        let sigma2 = (4.0 * probe_space.spacing()).powi(2);
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, sigma2, hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let partition = Partition::half_lines(&object_space, 0.0).unwrap();
        let povm = smeared_position_povm(&e, &partition, &object_space).unwrap();
        let left = match &povm.effects[0] {
            Effect::Diagonal(d) => d.clone(),
            _ => panic!("diagonal expected"),
        };
        // Away from the split the effect is an indicator up to O(sigma).
        for (k, &x) in object_space.positions().iter().enumerate() {
            if x < -1.0 && x > -12.0 {
                assert!((left[k] - 1.0).abs() < 1e-8);
            }
            if x > 1.0 && x < 12.0 {
                assert!(left[k].abs() < 1e-8);
            }
        }
        // But never exactly a projection: the entry at the split stays
        // strictly inside (0, 1).
        let k0 = 128; // x = 0
        assert!(left[k0] > 1e-3 && left[k0] < 1.0 - 1e-3);
    }

    #[test]
    fn povm_statistics_match_scheme_statistics() {
        let object_space = GridSpace::new(64, 24.0).unwrap();
        let probe_space = GridSpace::new(64, 24.0).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.5, hb()).unwrap();
        let cells = Partition::uniform_cover(&object_space, 6).unwrap();
        let scheme =
            standard_position_scheme(&object_space, &probe, 1.0, cells.clone(), hb()).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let povm = smeared_position_povm(&e, &cells, &object_space).unwrap();
        let psi = WaveFunction::gaussian(&object_space, 0.7, 0.3, 0.9, hb()).unwrap();
        let from_scheme = pointer_statistics(&scheme, &psi).unwrap();
        let from_povm = povm.probabilities(&psi);
        for (a, b) in from_scheme.iter().zip(from_povm.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn closed_form_matches_polarization_extraction() {
        let object_space = GridSpace::new(48, 20.0).unwrap();
        let probe_space = GridSpace::new(48, 20.0).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.6, hb()).unwrap();
        let cells = Partition::uniform_cover(&object_space, 5).unwrap();
        let scheme =
            standard_position_scheme(&object_space, &probe, 1.0, cells.clone(), hb()).unwrap();
        let extracted = extract_povm(&scheme, 48).unwrap();
        let e = confidence_function(&probe, 1.0).unwrap();
        let closed = smeared_position_povm(&e, &cells, &object_space).unwrap();
        for (a, b) in extracted.effects.iter().zip(closed.effects.iter()) {
            let d = crate::linalg::max_abs_diff(&a.to_dense(), &b.to_dense());
            assert!(d < 1e-7, "effect deviation {d}");
        }
    }

    #[test]
    fn variance_decomposition_holds() {
        let object_space = GridSpace::new(256, 40.0).unwrap();
        let probe_space = GridSpace::new(256, 40.0).unwrap();
        let psi = WaveFunction::gaussian(&object_space, 0.0, 0.0, 1.0, hb()).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.25, hb()).unwrap();
        let r = variance_relation_report(&psi, &probe, 1.0).unwrap();
        assert_abs_diff_eq!(r.measured_variance, 1.25, epsilon = 1e-6);
        assert_abs_diff_eq!(r.object_variance, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.noise, 0.25, epsilon = 1e-6);
        assert!(r.residual() < 1e-6 * r.measured_variance);
    }

    #[test]
    fn strong_coupling_suppresses_noise() {
        // lambda = 10 pushes branches out to +-10 |q|, so the probe box must
        // be an order of magnitude wider.
        let object_space = GridSpace::new(256, 40.0).unwrap();
        let probe_space = GridSpace::new(2048, 300.0).unwrap();
        let psi = WaveFunction::gaussian(&object_space, 0.0, 0.0, 1.0, hb()).unwrap();
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.25, hb()).unwrap();
        let r = variance_relation_report(&psi, &probe, 10.0).unwrap();
        assert_abs_diff_eq!(r.noise, 0.0025, epsilon = 1e-6 * 0.0025);
        assert_abs_diff_eq!(r.measured_variance, 1.0025, epsilon = 2e-6);
        assert!(r.residual() < 1e-6 * r.measured_variance);
    }

    #[test]
    fn noise_is_positive_even_for_grid_narrow_probes() {
        let object_space = GridSpace::new(128, 30.0).unwrap();
        let probe_space = GridSpace::new(2048, 30.0).unwrap();
        let psi = WaveFunction::gaussian(&object_space, 0.0, 0.0, 1.0, hb()).unwrap();
        let sigma2 = probe_space.spacing().powi(2) * 4.0;
        let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, sigma2, hb()).unwrap();
        let r = variance_relation_report(&psi, &probe, 1.0).unwrap();
        assert!(r.noise > 0.0);
        assert!(r.noise < 1e-3);
        assert!(r.residual() < 1e-6 * r.measured_variance);
    }
}
