//! Dense-path checks: a standard coupling realized by explicit matrix
//! exponentiation must agree with the conjugate-shift kernel, and a
//! non-standard coupling must fail the first-kind check -- demonstrating
//! that the diagnostic actually discriminates.

use ndarray::{Array2, IxDyn};
use num_complex::Complex64;

use povmlab::grid::{GridSpace, Partition};
use povmlab::hbar::PlanckConstant;
use povmlab::operator::HermitianOperator;
use povmlab::scheme::{
    conditional_object_state, evolve_scheme, extract_povm, first_kind_check, pointer_statistics,
    pointer_statistics_mixed, repeatability_check, Coupling, MeasurementScheme, PointerSpec,
    ShiftObservable,
};
use povmlab::state::WaveFunction;

fn hb() -> PlanckConstant {
    PlanckConstant::default()
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

/// `exp(-i lambda Q (x) P1)` realized densely matches the shift kernel.
#[test]
fn dense_standard_coupling_matches_conjugate_shift() {
    let object = GridSpace::new(8, 8.0).unwrap();
    let probe = GridSpace::new(32, 16.0).unwrap();
    let probe_state = WaveFunction::gaussian(&probe, 0.0, 0.0, 0.5, hb()).unwrap();
    let lambda = 0.7;
    let cells = Partition::uniform_cover(&GridSpace::new(8, 16.0 / lambda).unwrap(), 4).unwrap();

    let q_obj = HermitianOperator::position(&object).to_dense();
    let p_probe = HermitianOperator::momentum(&probe, hb()).to_dense();
    let h = kron(&q_obj, &p_probe);
    let dense = MeasurementScheme::new(
        object.clone(),
        probe_state.clone(),
        PointerSpec::position(cells.clone(), lambda),
        Coupling::Dense {
            hamiltonian: h,
            time: lambda,
        },
        hb(),
    )
    .unwrap();
    let shift = MeasurementScheme::new(
        object.clone(),
        probe_state.clone(),
        PointerSpec::position(cells, lambda),
        Coupling::ConjugateShift {
            observable: ShiftObservable::Position,
            lambda,
        },
        hb(),
    )
    .unwrap();

    // Strip the probe profile so both paths use spectral shifts of the same
    // sampled data.
    let raw_probe = WaveFunction::from_samples(
        probe.clone(),
        probe_state.amplitudes().iter().copied().collect(),
    )
    .unwrap();
    let shift_raw = MeasurementScheme::new(
        object.clone(),
        raw_probe,
        shift.pointer().clone(),
        shift.coupling().clone(),
        hb(),
    )
    .unwrap();

    let mut v = vec![Complex64::default(); 8];
    v[2] = Complex64::new(0.6, 0.0);
    v[5] = Complex64::new(0.8, 0.2);
    let norm: f64 = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * object.spacing()).sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    let psi = WaveFunction::from_samples(object, v).unwrap();

    let via_dense = evolve_scheme(&dense, &psi).unwrap();
    let via_shift = evolve_scheme(&shift_raw, &psi).unwrap();
    let mut worst = 0.0_f64;
    for (a, b) in via_dense
        .amplitudes()
        .iter()
        .zip(via_shift.amplitudes().iter())
    {
        worst = worst.max((a - b).norm());
    }
    assert!(worst < 1e-9, "dense vs shift kernel deviation {worst}");
}

/// Dense-realized standard couplings stay first kind; adding a second,
/// non-commuting coupling term breaks it by orders of magnitude.
#[test]
fn non_standard_coupling_fails_the_first_kind_check() {
    let object = GridSpace::new(6, 6.0).unwrap();
    let probe = GridSpace::new(32, 12.0).unwrap();
    let probe_state = WaveFunction::gaussian(&probe, 0.0, 0.0, 0.5, hb()).unwrap();
    let lambda = 1.0;
    let cells = Partition::uniform_cover(&GridSpace::new(4, 12.0).unwrap(), 4).unwrap();

    let q_obj = HermitianOperator::position(&object).to_dense();
    let p_obj = HermitianOperator::momentum(&object, hb()).to_dense();
    let q_probe = HermitianOperator::position(&probe).to_dense();
    let p_probe = HermitianOperator::momentum(&probe, hb()).to_dense();

    let mut psi_v = vec![Complex64::default(); 6];
    psi_v[1] = Complex64::new(0.5, 0.0);
    psi_v[2] = Complex64::new(0.7, 0.1);
    psi_v[4] = Complex64::new(0.4, -0.3);
    let norm: f64 = (psi_v.iter().map(|z| z.norm_sqr()).sum::<f64>() * object.spacing()).sqrt();
    psi_v.iter_mut().for_each(|z| *z /= norm);
    let psi = WaveFunction::from_samples(object.clone(), psi_v).unwrap();

    // Standard coupling, dense realization: first kind to solver precision.
    let standard = MeasurementScheme::new(
        object.clone(),
        probe_state.clone(),
        PointerSpec::position(cells.clone(), lambda),
        Coupling::Dense {
            hamiltonian: kron(&q_obj, &p_probe),
            time: lambda,
        },
        hb(),
    )
    .unwrap();
    let povm = extract_povm(&standard, 6).unwrap();
    let fk = first_kind_check(&standard, &psi, &povm).unwrap();
    assert!(fk < 1e-7, "standard dense coupling first-kind deviation {fk}");

    // A (x) B + B' (x) A' coupling: the measured observable no longer
    // commutes with the disturbance, and the first-kind property collapses.
    let h = kron(&q_obj, &p_probe) + &kron(&p_obj, &q_probe);
    let twisted = MeasurementScheme::new(
        object.clone(),
        probe_state.clone(),
        PointerSpec::position(cells, lambda),
        Coupling::Dense {
            hamiltonian: h,
            time: lambda,
        },
        hb(),
    )
    .unwrap();
    let povm = extract_povm(&twisted, 6).unwrap();
    // The extraction itself still defines a POVM...
    assert!(povm.positivity_defect() < 1e-8);
    assert!(povm.completeness_defect() < 1e-8);
    // ...and its statistics still reproduce the scheme's.
    let direct = pointer_statistics(&twisted, &psi).unwrap();
    let via = povm.probabilities(&psi);
    for (a, b) in direct.iter().zip(via.iter()) {
        assert!((a - b).abs() < 1e-9);
    }
    // ...but the measurement disturbs its own observable.
    let fk = first_kind_check(&twisted, &psi, &povm).unwrap();
    assert!(fk > 1e-3, "twisted coupling first-kind deviation only {fk}");
}

/// The dense path supports repeatability diagnostics through the full
/// Lueders pipeline.
#[test]
fn dense_path_repeatability_runs_end_to_end() {
    let object = GridSpace::new(6, 6.0).unwrap();
    let probe = GridSpace::new(32, 12.0).unwrap();
    let probe_state = WaveFunction::gaussian(&probe, 0.0, 0.0, 0.25, hb()).unwrap();
    let cells = Partition::uniform_cover(&GridSpace::new(4, 12.0).unwrap(), 4).unwrap();
    let q_obj = HermitianOperator::position(&object).to_dense();
    let p_probe = HermitianOperator::momentum(&probe, hb()).to_dense();
    let scheme = MeasurementScheme::new(
        object.clone(),
        probe_state,
        PointerSpec::position(cells, 1.0),
        Coupling::Dense {
            hamiltonian: kron(&q_obj, &p_probe),
            time: 1.0,
        },
        hb(),
    )
    .unwrap();
    let mut v = vec![Complex64::default(); 6];
    let amp = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    v[1] = amp;
    v[4] = amp;
    let psi = WaveFunction::from_samples(object, v).unwrap();
    let stats = pointer_statistics(&scheme, &psi).unwrap();
    // The two dominant cells catch one branch each and are close to (but
    // never exactly) repeatable; conditioning on a tail cell throws the
    // state back toward the branch center, so the worst case is near 1.
    let rep = repeatability_check(&scheme, &psi).unwrap();
    assert!(rep > 0.9, "tail cells should dominate the deficit, got {rep}");
    for (j, &p) in stats.iter().enumerate() {
        if p < 0.4 {
            continue;
        }
        let (_, rho) = conditional_object_state(&scheme, &psi, j).unwrap();
        let second = pointer_statistics_mixed(&scheme, &rho).unwrap();
        assert!(
            second[j] > 0.97 && second[j] < 1.0 - 1e-4,
            "dominant cell {j}: repeat probability {}",
            second[j]
        );
    }
    let _ = psi.amplitudes()[IxDyn(&[0])];
}
