//! Shared fixtures for the povmlab benchmarks.

use povmlab::discrete::{standard_discrete_scheme, DiscreteObservable};
use povmlab::grid::{GridSpace, Partition};
use povmlab::joint::JointScheme;
use povmlab::scheme::MeasurementScheme;
use povmlab::state::WaveFunction;
use povmlab::PlanckConstant;

pub fn hbar() -> PlanckConstant {
    PlanckConstant::default()
}

/// Standard unsharp position scheme on matched n-point grids (fixed
/// spacing, so every size resolves the probe).
pub fn position_scheme(n: usize) -> (MeasurementScheme, WaveFunction) {
    let box_length = 0.375 * n as f64;
    let object = GridSpace::new(n, box_length).unwrap();
    let probe = GridSpace::new(n, box_length).unwrap();
    let probe_state = WaveFunction::gaussian(&probe, 0.0, 0.0, 0.25, hbar()).unwrap();
    let cells = Partition::uniform_cover(&object, 8).unwrap();
    let scheme =
        MeasurementScheme::standard_position(object.clone(), probe_state, 1.0, cells, hbar())
            .unwrap();
    let psi = WaveFunction::gaussian(&object, 0.3, 0.0, 0.5, hbar()).unwrap();
    (scheme, psi)
}

/// Two-eigenvalue discrete scheme with a Gaussian probe.
pub fn discrete_scheme(n_probe: usize) -> (MeasurementScheme, DiscreteObservable, WaveFunction) {
    let object = GridSpace::new(4, 4.0).unwrap();
    let samples = [-1.0, 1.0, 1.0, 1.0];
    let a = DiscreteObservable::from_position_samples(object.clone(), &samples, 1e-12).unwrap();
    let probe_space = GridSpace::new(n_probe, 30.0).unwrap();
    let probe = WaveFunction::gaussian(&probe_space, 0.0, 0.0, 0.25, hbar()).unwrap();
    let scheme = standard_discrete_scheme(&a, &probe, 1.0, hbar()).unwrap();
    let mut v = vec![num_complex::Complex64::default(); 4];
    v[0] = num_complex::Complex64::new(0.6, 0.0);
    v[1] = num_complex::Complex64::new(0.8, 0.0);
    let psi = WaveFunction::from_samples(object, v).unwrap();
    (scheme, a, psi)
}

/// Joint scheme with all factors at n points.
pub fn joint_scheme(n: usize) -> (JointScheme, WaveFunction) {
    let object = GridSpace::new(n, 24.0).unwrap();
    let s1 = GridSpace::new(n, 24.0).unwrap();
    let s2 = GridSpace::new(n, 24.0).unwrap();
    let phi1 = WaveFunction::gaussian(&s1, 0.0, 0.0, 0.25, hbar()).unwrap();
    let phi2 = WaveFunction::gaussian(&s2, 0.0, 0.0, 0.5, hbar()).unwrap();
    let scheme =
        JointScheme::with_uniform_cells(object.clone(), phi1, phi2, 1.0, 1.0, hbar(), 16, 16)
            .unwrap();
    let psi = WaveFunction::gaussian(&object, 0.5, 0.0, 0.5, hbar()).unwrap();
    (scheme, psi)
}
