//! The measurement-scheme engine.
//!
//! A scheme couples an object to a probe with `U = exp(-i lambda A (x) P1 / hbar)`
//! (the conjugate-shift form, which translates the probe by `lambda a`) or
//! with an arbitrary dense Hamiltonian on a small composite space.  After the
//! interaction a pointer observable is read on the probe over a partition of
//! outcome cells; stipulating that the pointer statistics reproduce the
//! object statistics for every input state defines the measured POVM, which
//! this module extracts and stress-tests.
//!
//! Conjugate-shift couplings decompose the evolved state into branches
//! `(component_i psi) (x) (probe translated by lambda a_i)`.  Pointer-cell
//! masses for such branches are computed analytically from the probe profile
//! (or spectrally from its samples), with periodic images, so a covering
//! partition always carries total mass 1 -- exactly what the rolled grid
//! dynamics produce.

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::discrete::DiscreteObservable;
use crate::error::{LabError, Result};
use crate::fourier::{self, CellIntegrator};
use crate::grid::{GridSpace, Interval, Partition};
use crate::hbar::PlanckConstant;
use crate::linalg;
use crate::operator::HermitianOperator;
use crate::profile::Profile;
use crate::state::{DensityOperator, WaveFunction, BOUNDARY_FRACTION, BOUNDARY_MASS_BOUND};

/// Largest object dimension for which the polarization extraction runs.
pub const POVM_EXTRACTION_LIMIT: usize = 256;
/// Largest composite dimension for the dense-coupling path.
pub const DENSE_COMPOSITE_LIMIT: usize = 1024;
/// Outcome probabilities below this cannot be conditioned on.
pub const CONDITIONING_FLOOR: f64 = 1e-12;

/// What the pointer reads on the probe.
#[derive(Debug, Clone)]
pub enum PointerObservable {
    /// The probe position, read over scaled cells.
    ProbePosition,
    /// The probe momentum, read over scaled cells on the momentum grid.
    ProbeMomentum,
    /// An arbitrary Hermitian observable on the probe (dense path only).
    Custom(HermitianOperator),
}

/// Pointer observable, outcome cells, and the scale mapping object values to
/// pointer readings.
#[derive(Debug, Clone)]
pub struct PointerSpec {
    pub observable: PointerObservable,
    /// Cells in object-value units; the pointer is read in `scale * cell`.
    pub cells: Partition,
    pub scale: f64,
    /// Nominal object value indicated by each cell.
    pub pointer_values: Vec<f64>,
}

impl PointerSpec {
    /// Position pointer over `cells` with reading scale `scale`; cell
    /// midpoints serve as nominal values until overridden.
    pub fn position(cells: Partition, scale: f64) -> Self {
        let pointer_values = cells.cells().iter().map(|c| c.midpoint()).collect();
        PointerSpec {
            observable: PointerObservable::ProbePosition,
            cells,
            scale,
            pointer_values,
        }
    }

    pub fn with_pointer_values(mut self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.cells.len());
        self.pointer_values = values;
        self
    }
}

/// The object observable entering a conjugate-shift coupling.
#[derive(Debug, Clone)]
pub enum ShiftObservable {
    /// Discrete `A = sum_i a_i P_i`; one branch per eigenvalue.
    Discrete(DiscreteObservable),
    /// Sharp position on the object grid; one branch per grid point.
    Position,
}

/// The object-probe coupling.
#[derive(Debug, Clone)]
pub enum Coupling {
    /// `U = exp(-i lambda A (x) P_probe / hbar)`: translates the probe by
    /// `lambda a` conditioned on the object value `a`.
    ConjugateShift {
        observable: ShiftObservable,
        lambda: f64,
    },
    /// `U = exp(-i H t / hbar)` with a dense Hermitian `H` on the composite
    /// space (row-major object (x) probe ordering).
    Dense {
        hamiltonian: Array2<Complex64>,
        time: f64,
    },
}

/// A measurement scheme: probe preparation, pointer, coupling.
#[derive(Debug, Clone)]
pub struct MeasurementScheme {
    object_space: GridSpace,
    probe_space: GridSpace,
    probe_state: WaveFunction,
    pointer: PointerSpec,
    coupling: Coupling,
    hbar: PlanckConstant,
}

impl MeasurementScheme {
    pub fn new(
        object_space: GridSpace,
        probe_state: WaveFunction,
        pointer: PointerSpec,
        coupling: Coupling,
        hbar: PlanckConstant,
    ) -> Result<Self> {
        if probe_state.n_factors() != 1 {
            return Err(LabError::InvalidScheme(
                "probe state must live on a single grid".into(),
            ));
        }
        let probe_space = probe_state.space(0).clone();
        if (probe_state.norm() - 1.0).abs() > 1e-9 {
            return Err(LabError::InvalidScheme(format!(
                "probe state norm {} != 1",
                probe_state.norm()
            )));
        }
        if pointer.pointer_values.len() != pointer.cells.len() {
            return Err(LabError::InvalidScheme(
                "pointer function must assign one value per cell".into(),
            ));
        }
        match &coupling {
            Coupling::ConjugateShift { lambda, observable } => {
                if !lambda.is_finite() {
                    return Err(LabError::InvalidScheme(
                        "coupling constant not finite".into(),
                    ));
                }
                if !matches!(pointer.observable, PointerObservable::ProbePosition) {
                    return Err(LabError::InvalidScheme(
                        "conjugate-shift schemes read the probe position pointer".into(),
                    ));
                }
                if let ShiftObservable::Discrete(d) = observable {
                    if d.space() != &object_space {
                        return Err(LabError::SpaceMismatch(
                            "discrete observable lives on a different object grid".into(),
                        ));
                    }
                }
            }
            Coupling::Dense { hamiltonian, time } => {
                if !time.is_finite() {
                    return Err(LabError::InvalidScheme("coupling time not finite".into()));
                }
                let dim = object_space.n_points() * probe_space.n_points();
                if dim > DENSE_COMPOSITE_LIMIT {
                    return Err(LabError::SizeGuard {
                        n: dim,
                        max: DENSE_COMPOSITE_LIMIT,
                        hint: "use a conjugate-shift coupling".into(),
                    });
                }
                if hamiltonian.nrows() != dim || hamiltonian.ncols() != dim {
                    return Err(LabError::SpaceMismatch(format!(
                        "dense coupling is {}x{}, composite dimension is {dim}",
                        hamiltonian.nrows(),
                        hamiltonian.ncols()
                    )));
                }
                if linalg::hermiticity_defect(hamiltonian) > 1e-10 {
                    return Err(LabError::InvalidScheme(
                        "dense coupling Hamiltonian is not Hermitian".into(),
                    ));
                }
            }
        }
        Ok(MeasurementScheme {
            object_space,
            probe_space,
            probe_state,
            pointer,
            coupling,
            hbar,
        })
    }

    /// The standard unsharp position scheme: `A = Q`, probe translated by
    /// `lambda q`, probe position read over `lambda * cells`.
    ///
    /// At `lambda = 0` the pointer is read over the raw (unscaled) cells.
    pub fn standard_position(
        object_space: GridSpace,
        probe_state: WaveFunction,
        lambda: f64,
        cells: Partition,
        hbar: PlanckConstant,
    ) -> Result<Self> {
        let scale = if lambda == 0.0 { 1.0 } else { lambda };
        let pointer = PointerSpec::position(cells, scale);
        MeasurementScheme::new(
            object_space,
            probe_state,
            pointer,
            Coupling::ConjugateShift {
                observable: ShiftObservable::Position,
                lambda,
            },
            hbar,
        )
    }

    pub fn object_space(&self) -> &GridSpace {
        &self.object_space
    }

    pub fn probe_space(&self) -> &GridSpace {
        &self.probe_space
    }

    pub fn probe_state(&self) -> &WaveFunction {
        &self.probe_state
    }

    pub fn pointer(&self) -> &PointerSpec {
        &self.pointer
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn hbar(&self) -> PlanckConstant {
        self.hbar
    }

    fn check_object_state(&self, state: &WaveFunction) -> Result<()> {
        if state.n_factors() != 1 || state.space(0) != &self.object_space {
            return Err(LabError::SpaceMismatch(
                "object state does not live on the scheme's object grid".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Branch machinery for conjugate-shift couplings.
// ---------------------------------------------------------------------------

pub(crate) struct BranchSet {
    /// Probe translation per branch, reduced into the probe box.
    pub(crate) shifts: Vec<f64>,
    /// Analytic shifted profiles, when the probe carries one.
    pub(crate) profiles: Option<Vec<Profile>>,
    /// Sampled, grid-normalized branch states.
    pub(crate) samples: Vec<Vec<Complex64>>,
}

impl MeasurementScheme {
    fn branch_shifts(&self) -> Option<Vec<f64>> {
        match &self.coupling {
            Coupling::ConjugateShift { observable, lambda } => Some(match observable {
                ShiftObservable::Discrete(d) => {
                    d.eigenvalues().iter().map(|&a| lambda * a).collect()
                }
                ShiftObservable::Position => self
                    .object_space
                    .positions()
                    .iter()
                    .map(|&q| lambda * q)
                    .collect(),
            }),
            Coupling::Dense { .. } => None,
        }
    }

    pub(crate) fn branch_set(&self) -> Option<BranchSet> {
        let raw_shifts = self.branch_shifts()?;
        let big_l = self.probe_space.box_length();
        let shifts: Vec<f64> = raw_shifts
            .iter()
            .map(|s| s - (s / big_l).round() * big_l)
            .collect();
        let probe_samples: Vec<Complex64> =
            self.probe_state.amplitudes().iter().copied().collect();
        let dx = self.probe_space.spacing();
        let (profiles, samples) = match self.probe_state.profile() {
            Some(p) => {
                let profiles: Vec<Profile> = shifts.iter().map(|&s| p.shifted(s)).collect();
                let samples: Vec<Vec<Complex64>> = profiles
                    .iter()
                    .map(|prof| {
                        let mut v: Vec<Complex64> = self
                            .probe_space
                            .positions()
                            .iter()
                            .map(|&x| prof.eval(x))
                            .collect();
                        let n: f64 = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
                        let inv = Complex64::new(1.0 / n, 0.0);
                        v.iter_mut().for_each(|z| *z *= inv);
                        v
                    })
                    .collect();
                (Some(profiles), samples)
            }
            None => {
                let samples: Vec<Vec<Complex64>> = shifts
                    .iter()
                    .map(|&s| fourier::shift(&probe_samples, &self.probe_space, s))
                    .collect();
                (None, samples)
            }
        };
        Some(BranchSet {
            shifts,
            profiles,
            samples,
        })
    }

    /// `int_{scale*cell} conj(branch_i) branch_j`, periodic over the probe box.
    fn branch_pair_cell(
        &self,
        branches: &BranchSet,
        integrators: &Option<Vec<CellIntegrator>>,
        i: usize,
        j: usize,
        cell: &Interval,
    ) -> Complex64 {
        let scaled = cell.scaled(self.pointer.scale);
        match &branches.profiles {
            Some(profiles) => Profile::pair_cell_integral_periodic(
                &profiles[i],
                &profiles[j],
                scaled.lo,
                scaled.hi,
                self.probe_space.box_length(),
            ),
            None => {
                if i == j {
                    integrators.as_ref().unwrap()[i].integral(scaled.lo, scaled.hi)
                } else {
                    let prod: Vec<Complex64> = branches.samples[i]
                        .iter()
                        .zip(branches.samples[j].iter())
                        .map(|(a, b)| a.conj() * b)
                        .collect();
                    CellIntegrator::new(&prod, &self.probe_space).integral(scaled.lo, scaled.hi)
                }
            }
        }
    }

    fn density_integrators(&self, branches: &BranchSet) -> Option<Vec<CellIntegrator>> {
        if branches.profiles.is_some() {
            return None;
        }
        Some(
            branches
                .samples
                .iter()
                .map(|s| {
                    let prod: Vec<Complex64> =
                        s.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
                    CellIntegrator::new(&prod, &self.probe_space)
                })
                .collect(),
        )
    }

    /// Branch-by-cell mass table `W[i][j] = p^Z_{phi_i}(scale * cell_j)`.
    pub(crate) fn branch_cell_masses(&self, branches: &BranchSet) -> Array2<f64> {
        let integrators = self.density_integrators(branches);
        let nb = branches.shifts.len();
        let nc = self.pointer.cells.len();
        let mut w = Array2::zeros((nb, nc));
        for i in 0..nb {
            for (j, cell) in self.pointer.cells.cells().iter().enumerate() {
                let m = self.branch_pair_cell(branches, &integrators, i, i, cell).re;
                w[[i, j]] = if m < 0.0 && m > -1e-12 { 0.0 } else { m };
            }
        }
        w
    }

    /// Object components per branch, as coefficient vectors.
    fn object_components(&self, state: &WaveFunction) -> Vec<Array1<Complex64>> {
        let c = state.coefficients();
        match &self.coupling {
            Coupling::ConjugateShift {
                observable: ShiftObservable::Discrete(d),
                ..
            } => d
                .projections()
                .iter()
                .map(|p| {
                    let n = c.len();
                    let mut out = Array1::zeros(n);
                    for a in 0..n {
                        let mut acc = Complex64::default();
                        for b in 0..n {
                            acc += p[[a, b]] * c[b];
                        }
                        out[a] = acc;
                    }
                    out
                })
                .collect(),
            Coupling::ConjugateShift {
                observable: ShiftObservable::Position,
                ..
            } => (0..c.len())
                .map(|k| {
                    let mut out = Array1::zeros(c.len());
                    out[k] = c[k];
                    out
                })
                .collect(),
            Coupling::Dense { .. } => unreachable!("dense couplings have no branches"),
        }
    }

    fn branch_weights(&self, state: &WaveFunction) -> Vec<f64> {
        self.object_components(state)
            .iter()
            .map(|comp| comp.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    fn dense_unitary(&self) -> Array2<Complex64> {
        match &self.coupling {
            Coupling::Dense { hamiltonian, time } => {
                let gen =
                    hamiltonian.mapv(|z| z * Complex64::new(0.0, -time / self.hbar.value()));
                linalg::expm(&gen)
            }
            _ => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
// Effects and POVMs.
// ---------------------------------------------------------------------------

/// A positive operator bounded by the identity, in the coefficient
/// convention of the object grid.
#[derive(Debug, Clone)]
pub enum Effect {
    /// Multiplication operator: a function of the sharp position.
    Diagonal(Array1<f64>),
    /// Dense Hermitian matrix.
    Dense(Array2<Complex64>),
}

impl Effect {
    pub fn dim(&self) -> usize {
        match self {
            Effect::Diagonal(d) => d.len(),
            Effect::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        match self {
            Effect::Diagonal(d) => Array2::from_diag(&Array1::from_iter(
                d.iter().map(|&v| Complex64::new(v, 0.0)),
            )),
            Effect::Dense(m) => m.clone(),
        }
    }

    /// `<c|E c>` for a coefficient vector.
    pub fn expectation(&self, c: &Array1<Complex64>) -> f64 {
        match self {
            Effect::Diagonal(d) => c.iter().zip(d.iter()).map(|(z, &v)| z.norm_sqr() * v).sum(),
            Effect::Dense(m) => {
                let mut acc = Complex64::default();
                for a in 0..c.len() {
                    for b in 0..c.len() {
                        acc += c[a].conj() * m[[a, b]] * c[b];
                    }
                }
                acc.re
            }
        }
    }

    /// `tr(E rho)`.
    pub fn expectation_mixed(&self, rho: &DensityOperator) -> f64 {
        let r = rho.matrix();
        match self {
            Effect::Diagonal(d) => (0..d.len()).map(|k| d[k] * r[[k, k]].re).sum(),
            Effect::Dense(m) => {
                let mut acc = Complex64::default();
                for a in 0..m.nrows() {
                    for b in 0..m.ncols() {
                        acc += m[[a, b]] * r[[b, a]];
                    }
                }
                acc.re
            }
        }
    }

    /// Spectral range `(min, max)`.
    pub fn spectral_range(&self) -> (f64, f64) {
        match self {
            Effect::Diagonal(d) => {
                let min = d.iter().copied().fold(f64::INFINITY, f64::min);
                let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (min, max)
            }
            Effect::Dense(m) => {
                let e = linalg::eigh(m);
                (e.values[0], e.values[e.values.len() - 1])
            }
        }
    }
}

/// A labeled family of effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    pub cells: Partition,
    pub pointer_values: Vec<f64>,
    pub effects: Vec<Effect>,
}

impl Povm {
    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Outcome probabilities in a pure state.
    pub fn probabilities(&self, state: &WaveFunction) -> Vec<f64> {
        let c = state.coefficients();
        self.effects.iter().map(|e| e.expectation(&c)).collect()
    }

    /// Outcome probabilities in a mixed state.
    pub fn probabilities_mixed(&self, rho: &DensityOperator) -> Vec<f64> {
        self.effects.iter().map(|e| e.expectation_mixed(rho)).collect()
    }

    /// Max-norm deviation of `sum_i E_i` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.effects[0].dim();
        let mut sum = Array2::<Complex64>::zeros((n, n));
        for e in &self.effects {
            sum += &e.to_dense();
        }
        linalg::max_abs_diff(&sum, &linalg::identity(n))
    }

    /// Worst Hermiticity defect and spectral excursion outside `[0, 1]`.
    pub fn positivity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for e in &self.effects {
            if let Effect::Dense(m) = e {
                worst = worst.max(linalg::hermiticity_defect(m));
            }
            let (lo, hi) = e.spectral_range();
            worst = worst.max((-lo).max(0.0)).max((hi - 1.0).max(0.0));
        }
        worst
    }

    /// Check all POVM invariants at the given tolerance.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let pos = self.positivity_defect();
        if pos > tol {
            return Err(LabError::InvalidArgument(format!(
                "effect spectra leave [0,1] by {pos:.2e}"
            )));
        }
        let comp = self.completeness_defect();
        if comp > tol {
            return Err(LabError::InvalidArgument(format!(
                "effects sum to identity only within {comp:.2e}"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// Apply the scheme's unitary coupling to `object (x) probe`.
pub fn evolve_scheme(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
) -> Result<WaveFunction> {
    scheme.check_object_state(object_state)?;
    match &scheme.coupling {
        Coupling::ConjugateShift { .. } => {
            let branches = scheme.branch_set().unwrap();
            check_branch_localization(scheme, &branches, object_state)?;
            let comps = scheme.object_components(object_state);
            let n_o = scheme.object_space.n_points();
            let n_p = scheme.probe_space.n_points();
            let inv_sqrt_dxo = 1.0 / scheme.object_space.spacing().sqrt();
            let mut amps = vec![Complex64::default(); n_o * n_p];
            for (comp, branch) in comps.iter().zip(branches.samples.iter()) {
                for a in 0..n_o {
                    if comp[a] == Complex64::default() {
                        continue;
                    }
                    let amp_a = comp[a] * inv_sqrt_dxo;
                    let row = &mut amps[a * n_p..(a + 1) * n_p];
                    for (slot, &b) in row.iter_mut().zip(branch.iter()) {
                        *slot += amp_a * b;
                    }
                }
            }
            let arr = ArrayD::from_shape_vec(IxDyn(&[n_o, n_p]), amps).unwrap();
            Ok(WaveFunction::from_parts(
                vec![scheme.object_space.clone(), scheme.probe_space.clone()],
                arr,
                None,
            ))
        }
        Coupling::Dense { .. } => evolve_dense(scheme, object_state),
    }
}

fn evolve_dense(scheme: &MeasurementScheme, object_state: &WaveFunction) -> Result<WaveFunction> {
    let u = scheme.dense_unitary();
    let composite = WaveFunction::tensor(&[object_state, &scheme.probe_state]);
    let n_o = scheme.object_space.n_points();
    let n_p = scheme.probe_space.n_points();
    let dim = n_o * n_p;
    let data: Vec<Complex64> = composite.amplitudes().iter().copied().collect();
    let mut out = vec![Complex64::default(); dim];
    for (a, out_a) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for b in 0..dim {
            acc += u[[a, b]] * data[b];
        }
        *out_a = acc;
    }
    let arr = ArrayD::from_shape_vec(IxDyn(&[n_o, n_p]), out).unwrap();
    Ok(WaveFunction::from_parts(
        vec![scheme.object_space.clone(), scheme.probe_space.clone()],
        arr,
        None,
    ))
}

/// The composite state's probe-axis boundary mass is the occupancy-weighted
/// sum of per-branch boundary masses; that total is what the guard bounds.
fn check_branch_localization(
    scheme: &MeasurementScheme,
    branches: &BranchSet,
    object_state: &WaveFunction,
) -> Result<()> {
    let weights = scheme.branch_weights(object_state);
    let edge = (0.5 - BOUNDARY_FRACTION) * scheme.probe_space.box_length();
    let big_l = scheme.probe_space.box_length();
    let dx = scheme.probe_space.spacing();
    let mut total = 0.0;
    let mut worst_shift = 0.0;
    let mut worst_mass = 0.0;
    for (i, (&w, &s)) in weights.iter().zip(branches.shifts.iter()).enumerate() {
        if w < 1e-16 {
            continue;
        }
        let mass = match &branches.profiles {
            Some(p) => 1.0 - p[i].cell_mass_periodic(-edge, edge, big_l),
            None => {
                branches.samples[i]
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| scheme.probe_space.position(*m).abs() >= edge)
                    .map(|(_, z)| z.norm_sqr())
                    .sum::<f64>()
                    * dx
            }
        };
        total += w * mass;
        if w * mass > worst_mass {
            worst_mass = w * mass;
            worst_shift = s;
        }
    }
    if total > BOUNDARY_MASS_BOUND {
        return Err(LabError::Localization {
            what: format!("probe branch shifted by {worst_shift:.4}"),
            mass: total,
            bound: BOUNDARY_MASS_BOUND,
        });
    }
    Ok(())
}

/// Pointer-cell probabilities for a pure object state.
pub fn pointer_statistics(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
) -> Result<Vec<f64>> {
    scheme.check_object_state(object_state)?;
    match &scheme.coupling {
        Coupling::ConjugateShift { .. } => {
            let branches = scheme.branch_set().unwrap();
            check_branch_localization(scheme, &branches, object_state)?;
            let w = scheme.branch_cell_masses(&branches);
            let weights = scheme.branch_weights(object_state);
            Ok(statistics_from_weights(&weights, &w))
        }
        Coupling::Dense { .. } => {
            let evolved = evolve_dense(scheme, object_state)?;
            dense_pointer_statistics(scheme, &evolved)
        }
    }
}

/// Pointer statistics without the localization guard (extraction needs basis
/// spikes at the box edge, which are legitimate there).
fn pointer_statistics_unguarded(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
) -> Result<Vec<f64>> {
    match &scheme.coupling {
        Coupling::ConjugateShift { .. } => {
            let branches = scheme.branch_set().unwrap();
            let w = scheme.branch_cell_masses(&branches);
            let weights = scheme.branch_weights(object_state);
            Ok(statistics_from_weights(&weights, &w))
        }
        Coupling::Dense { .. } => {
            let evolved = evolve_dense(scheme, object_state)?;
            dense_pointer_statistics(scheme, &evolved)
        }
    }
}

/// Pointer-cell probabilities for a mixed object state (fresh probe).
pub fn pointer_statistics_mixed(
    scheme: &MeasurementScheme,
    rho: &DensityOperator,
) -> Result<Vec<f64>> {
    if rho.space() != &scheme.object_space {
        return Err(LabError::SpaceMismatch(
            "mixed state does not live on the object grid".into(),
        ));
    }
    match &scheme.coupling {
        Coupling::ConjugateShift { observable, .. } => {
            let branches = scheme.branch_set().unwrap();
            let w = scheme.branch_cell_masses(&branches);
            // Branch components are mutually orthogonal, so only the
            // block-diagonal part of rho reaches the pointer.
            let diag: Vec<f64> = match observable {
                ShiftObservable::Discrete(d) => d
                    .projections()
                    .iter()
                    .map(|p| {
                        let mut acc = 0.0;
                        for a in 0..p.nrows() {
                            for b in 0..p.ncols() {
                                acc += (p[[a, b]] * rho.matrix()[[b, a]]).re;
                            }
                        }
                        acc
                    })
                    .collect(),
                ShiftObservable::Position => (0..rho.matrix().nrows())
                    .map(|k| rho.matrix()[[k, k]].re)
                    .collect(),
            };
            Ok(statistics_from_weights(&diag, &w))
        }
        Coupling::Dense { .. } => {
            // Evolve every spectral component of rho and mix the statistics.
            let e = linalg::eigh(rho.matrix());
            let n = rho.matrix().nrows();
            let mut acc = vec![0.0; scheme.pointer.cells.len()];
            let inv_sqrt_dx = 1.0 / scheme.object_space.spacing().sqrt();
            for (idx, &ev) in e.values.iter().enumerate() {
                if ev < 1e-14 {
                    continue;
                }
                let samples: Vec<Complex64> =
                    (0..n).map(|a| e.vectors[[a, idx]] * inv_sqrt_dx).collect();
                let wf = WaveFunction::from_parts(
                    vec![scheme.object_space.clone()],
                    ArrayD::from_shape_vec(IxDyn(&[n]), samples).unwrap(),
                    None,
                );
                let evolved = evolve_dense(scheme, &wf)?;
                let p = dense_pointer_statistics(scheme, &evolved)?;
                for (slot, v) in acc.iter_mut().zip(p.iter()) {
                    *slot += ev * v;
                }
            }
            Ok(acc)
        }
    }
}

fn statistics_from_weights(weights: &[f64], w: &Array2<f64>) -> Vec<f64> {
    let nc = w.ncols();
    let mut out = vec![0.0; nc];
    for (i, &wi) in weights.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for (j, slot) in out.iter_mut().enumerate() {
            *slot += wi * w[[i, j]];
        }
    }
    for v in out.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    out
}

/// Pointer statistics read directly off an evolved composite state
/// (dense-coupling path; grid-native cell projections).
fn dense_pointer_statistics(
    scheme: &MeasurementScheme,
    evolved: &WaveFunction,
) -> Result<Vec<f64>> {
    let n_o = scheme.object_space.n_points();
    let n_p = scheme.probe_space.n_points();
    let scale = scheme.pointer.scale;
    let data = evolved.amplitudes().as_slice().expect("standard layout");
    let measure = evolved.measure();
    match &scheme.pointer.observable {
        PointerObservable::ProbePosition => {
            let mut density = vec![0.0; n_p];
            for a in 0..n_o {
                for (m, d) in density.iter_mut().enumerate() {
                    *d += data[a * n_p + m].norm_sqr();
                }
            }
            Ok(scheme
                .pointer
                .cells
                .cells()
                .iter()
                .map(|cell| {
                    let sc = cell.scaled(scale);
                    density
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| sc.contains(scheme.probe_space.position(*m)))
                        .map(|(_, d)| d * measure)
                        .sum()
                })
                .collect())
        }
        PointerObservable::ProbeMomentum => {
            let plan = fourier::plan_forward(n_p);
            let mut density = vec![0.0; n_p];
            let mut buf = vec![Complex64::default(); n_p];
            for a in 0..n_o {
                buf.copy_from_slice(&data[a * n_p..(a + 1) * n_p]);
                plan.process(&mut buf);
                for (m, z) in buf.iter().enumerate() {
                    density[m] += z.norm_sqr();
                }
            }
            // |psihat|^2 = dxp^2/(2 pi hbar) |DFT|^2; the probability adds
            // the object measure dxo and the momentum bin width dp.
            let dxp = scheme.probe_space.spacing();
            let dxo = scheme.object_space.spacing();
            let dp = scheme.probe_space.momentum_spacing(scheme.hbar);
            let conv = dxp * dxp / (2.0 * std::f64::consts::PI * scheme.hbar.value()) * dxo * dp;
            Ok(scheme
                .pointer
                .cells
                .cells()
                .iter()
                .map(|cell| {
                    let sc = cell.scaled(scale);
                    density
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| {
                            sc.contains(scheme.probe_space.momentum_fft(*m, scheme.hbar))
                        })
                        .map(|(_, d)| d * conv)
                        .sum()
                })
                .collect())
        }
        PointerObservable::Custom(op) => {
            let m = op.to_dense();
            let e = linalg::eigh(&m);
            let s = measure.sqrt();
            let coeff: Vec<Complex64> = data.iter().map(|&z| z * s).collect();
            Ok(scheme
                .pointer
                .cells
                .cells()
                .iter()
                .map(|cell| {
                    let sc = cell.scaled(scale);
                    let mut p = 0.0;
                    for (idx, &ev) in e.values.iter().enumerate() {
                        if !sc.contains(ev) {
                            continue;
                        }
                        for a in 0..n_o {
                            let mut amp = Complex64::default();
                            for mm in 0..n_p {
                                amp += e.vectors[[mm, idx]].conj() * coeff[a * n_p + mm];
                            }
                            p += amp.norm_sqr();
                        }
                    }
                    p
                })
                .collect())
        }
    }
}

/// Recover the measured POVM by polarization over the object position basis.
///
/// `basis_size` must equal the object dimension; the partition must tile the
/// pointer range exactly once, otherwise the effects cannot sum to identity.
pub fn extract_povm(scheme: &MeasurementScheme, basis_size: usize) -> Result<Povm> {
    let n = scheme.object_space.n_points();
    if basis_size != n {
        return Err(LabError::InvalidArgument(format!(
            "basis_size {basis_size} != object dimension {n}"
        )));
    }
    if n > POVM_EXTRACTION_LIMIT {
        return Err(LabError::SizeGuard {
            n,
            max: POVM_EXTRACTION_LIMIT,
            hint: "use the closed-form effect construction of the model modules".into(),
        });
    }
    let cells = &scheme.pointer.cells;
    let lo = cells.cells()[0].lo;
    let hi = cells.cells()[cells.len() - 1].hi;
    let need = scheme.probe_space.box_length() / scheme.pointer.scale.abs();
    if ((hi - lo) - need).abs() > 1e-6 * need {
        return Err(LabError::Coverage(format!(
            "partition spans {}, pointer range is {need}",
            hi - lo
        )));
    }
    cells.check_covers(lo, hi, 1e-9 * need)?;

    // Precompute whatever the statistics pipeline can share across the n^2
    // basis evaluations: the branch mass table for conjugate shifts, the
    // dense unitary and pointer weights otherwise.
    let stats: Box<dyn Fn(&[Complex64]) -> Result<Vec<f64>>> = match &scheme.coupling {
        Coupling::ConjugateShift { observable, .. } => {
            let branches = scheme.branch_set().unwrap();
            let w = scheme.branch_cell_masses(&branches);
            let observable = observable.clone();
            Box::new(move |c: &[Complex64]| {
                let weights: Vec<f64> = match &observable {
                    ShiftObservable::Position => c.iter().map(|z| z.norm_sqr()).collect(),
                    ShiftObservable::Discrete(d) => d
                        .projections()
                        .iter()
                        .map(|p| {
                            let mut acc = 0.0;
                            for a in 0..p.nrows() {
                                let mut row = Complex64::default();
                                for b in 0..p.ncols() {
                                    row += p[[a, b]] * c[b];
                                }
                                acc += (c[a].conj() * row).re;
                            }
                            acc
                        })
                        .collect(),
                };
                Ok(statistics_from_weights(&weights, &w))
            })
        }
        Coupling::Dense { .. } => {
            let scheme = scheme.clone();
            Box::new(move |c: &[Complex64]| {
                let dx = scheme.object_space.spacing();
                let samples: Vec<Complex64> =
                    c.iter().map(|&z| z / Complex64::new(dx.sqrt(), 0.0)).collect();
                let wf = WaveFunction::from_parts(
                    vec![scheme.object_space.clone()],
                    ArrayD::from_shape_vec(IxDyn(&[samples.len()]), samples).unwrap(),
                    None,
                );
                pointer_statistics_unguarded(&scheme, &wf)
            })
        }
    };

    // Polarization over the coefficient basis.
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    let nc = cells.len();
    let mut mats: Vec<Array2<Complex64>> = (0..nc).map(|_| Array2::zeros((n, n))).collect();
    let mut diag = vec![vec![0.0; nc]; n];
    let mut basis = vec![Complex64::default(); n];
    for k in 0..n {
        basis[k] = Complex64::new(1.0, 0.0);
        let p = stats(&basis)?;
        basis[k] = Complex64::default();
        for (j, m) in mats.iter_mut().enumerate() {
            m[[k, k]] = Complex64::new(p[j], 0.0);
        }
        diag[k] = p;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            basis[j] = Complex64::new(inv_sqrt2, 0.0);
            basis[k] = Complex64::new(inv_sqrt2, 0.0);
            let p_plus = stats(&basis)?;
            basis[k] = Complex64::new(0.0, inv_sqrt2);
            let p_imag = stats(&basis)?;
            basis[j] = Complex64::default();
            basis[k] = Complex64::default();
            for (cell, m) in mats.iter_mut().enumerate() {
                let avg = 0.5 * (diag[j][cell] + diag[k][cell]);
                let re = p_plus[cell] - avg;
                let im = avg - p_imag[cell];
                m[[j, k]] = Complex64::new(re, im);
                m[[k, j]] = Complex64::new(re, -im);
            }
        }
    }
    Ok(Povm {
        cells: cells.clone(),
        pointer_values: scheme.pointer.pointer_values.clone(),
        effects: mats.into_iter().map(Effect::Dense).collect(),
    })
}

/// Reduced apparatus and object states after the measurement interaction.
pub fn reduced_states(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
) -> Result<(DensityOperator, DensityOperator)> {
    scheme.check_object_state(object_state)?;
    match &scheme.coupling {
        Coupling::ConjugateShift { .. } => {
            let branches = scheme.branch_set().unwrap();
            check_branch_localization(scheme, &branches, object_state)?;
            let comps = scheme.object_components(object_state);
            let n_p = scheme.probe_space.n_points();
            let n_o = scheme.object_space.n_points();
            let dxp = scheme.probe_space.spacing();

            // Apparatus: branch components are orthogonal, so
            // W = sum_i |comp_i|^2 |phi_i><phi_i|.
            let weights = scheme.branch_weights(object_state);
            let mut app = Array2::<Complex64>::zeros((n_p, n_p));
            for (i, branch) in branches.samples.iter().enumerate() {
                if weights[i] == 0.0 {
                    continue;
                }
                let w = Complex64::new(weights[i] * dxp, 0.0);
                for a in 0..n_p {
                    if branch[a] == Complex64::default() {
                        continue;
                    }
                    let wa = w * branch[a];
                    for b in 0..n_p {
                        app[[a, b]] += wa * branch[b].conj();
                    }
                }
            }

            // Object: T = sum_ij comp_i comp_j^dagger <phi_j|phi_i>.
            let overlaps = branch_overlaps(&branches, dxp);
            let nb = comps.len();
            let mut obj = Array2::<Complex64>::zeros((n_o, n_o));
            for i in 0..nb {
                for j in 0..nb {
                    let o = overlaps[[j, i]];
                    if o.norm_sqr() < 1e-60 {
                        continue;
                    }
                    for a in 0..n_o {
                        if comps[i][a] == Complex64::default() {
                            continue;
                        }
                        let oa = comps[i][a] * o;
                        for b in 0..n_o {
                            obj[[a, b]] += oa * comps[j][b].conj();
                        }
                    }
                }
            }
            let apparatus = DensityOperator::new(scheme.probe_space.clone(), app)?;
            let object = DensityOperator::new(scheme.object_space.clone(), obj)?;
            Ok((apparatus, object))
        }
        Coupling::Dense { .. } => {
            let evolved = evolve_scheme(scheme, object_state)?;
            let apparatus = evolved.partial_trace(1)?;
            let object = evolved.partial_trace(0)?;
            Ok((apparatus, object))
        }
    }
}

/// Grid inner products `<phi_j | phi_i>` for all branch pairs.
fn branch_overlaps(branches: &BranchSet, dx: f64) -> Array2<Complex64> {
    let nb = branches.samples.len();
    let mut o = Array2::zeros((nb, nb));
    for j in 0..nb {
        for i in 0..nb {
            let mut acc = Complex64::default();
            for (a, b) in branches.samples[j].iter().zip(branches.samples[i].iter()) {
                acc += a.conj() * b;
            }
            o[[j, i]] = acc * dx;
        }
    }
    o
}

/// Condition the object on the pointer landing in one cell.
///
/// Conditioning uses the sharp cell projection of the pointer; the returned
/// probability equals the corresponding `pointer_statistics` entry.
pub fn conditional_object_state(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
    cell_index: usize,
) -> Result<(f64, DensityOperator)> {
    scheme.check_object_state(object_state)?;
    if cell_index >= scheme.pointer.cells.len() {
        return Err(LabError::InvalidArgument(format!(
            "cell index {cell_index} out of range"
        )));
    }
    let cell = scheme.pointer.cells.cells()[cell_index];
    match &scheme.coupling {
        Coupling::ConjugateShift { .. } => {
            let branches = scheme.branch_set().unwrap();
            check_branch_localization(scheme, &branches, object_state)?;
            let comps = scheme.object_components(object_state);
            let integrators = scheme.density_integrators(&branches);
            let nb = comps.len();
            let n_o = scheme.object_space.n_points();

            let mut gram = Array2::<Complex64>::zeros((nb, nb));
            for j in 0..nb {
                for i in 0..nb {
                    gram[[j, i]] = self_adjoint_clip(
                        scheme.branch_pair_cell(&branches, &integrators, j, i, &cell),
                        j == i,
                    );
                }
            }
            let weights = scheme.branch_weights(object_state);
            let p: f64 = (0..nb).map(|i| weights[i] * gram[[i, i]].re).sum();
            if p <= CONDITIONING_FLOOR {
                return Err(LabError::Conditioning {
                    p,
                    min: CONDITIONING_FLOOR,
                });
            }
            let mut rho = Array2::<Complex64>::zeros((n_o, n_o));
            let inv_p = Complex64::new(1.0 / p, 0.0);
            for i in 0..nb {
                for j in 0..nb {
                    let g = gram[[j, i]] * inv_p;
                    if g.norm_sqr() < 1e-64 {
                        continue;
                    }
                    for a in 0..n_o {
                        if comps[i][a] == Complex64::default() {
                            continue;
                        }
                        let ga = comps[i][a] * g;
                        for b in 0..n_o {
                            rho[[a, b]] += ga * comps[j][b].conj();
                        }
                    }
                }
            }
            let rho = DensityOperator::new(scheme.object_space.clone(), rho)?;
            Ok((p, rho))
        }
        Coupling::Dense { .. } => {
            let evolved = evolve_scheme(scheme, object_state)?;
            conditional_from_composite(scheme, &evolved, &cell)
        }
    }
}

fn self_adjoint_clip(z: Complex64, diagonal: bool) -> Complex64 {
    if diagonal {
        let re = if z.re < 0.0 && z.re > -1e-12 { 0.0 } else { z.re };
        Complex64::new(re, 0.0)
    } else {
        z
    }
}

fn conditional_from_composite(
    scheme: &MeasurementScheme,
    evolved: &WaveFunction,
    cell: &Interval,
) -> Result<(f64, DensityOperator)> {
    let n_o = scheme.object_space.n_points();
    let n_p = scheme.probe_space.n_points();
    let sc = cell.scaled(scheme.pointer.scale);
    let keep: Vec<bool> = (0..n_p)
        .map(|m| sc.contains(scheme.probe_space.position(m)))
        .collect();
    let data = evolved.amplitudes().as_slice().expect("standard layout");
    let measure = evolved.measure();
    let mut p = 0.0;
    for a in 0..n_o {
        for m in 0..n_p {
            if keep[m] {
                p += data[a * n_p + m].norm_sqr() * measure;
            }
        }
    }
    if p <= CONDITIONING_FLOOR {
        return Err(LabError::Conditioning {
            p,
            min: CONDITIONING_FLOOR,
        });
    }
    let mut rho = Array2::<Complex64>::zeros((n_o, n_o));
    for a in 0..n_o {
        for b in 0..n_o {
            let mut acc = Complex64::default();
            for m in 0..n_p {
                if keep[m] {
                    acc += data[a * n_p + m] * data[b * n_p + m].conj();
                }
            }
            rho[[a, b]] = acc * (measure / p);
        }
    }
    Ok((p, DensityOperator::new(scheme.object_space.clone(), rho)?))
}

/// Max deviation between the POVM statistics of the input state and of the
/// unconditional post-measurement state.
pub fn first_kind_check(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
    povm: &Povm,
) -> Result<f64> {
    let before = povm.probabilities(object_state);
    let (_, t_state) = reduced_states(scheme, object_state)?;
    let after = povm.probabilities_mixed(&t_state);
    Ok(before
        .iter()
        .zip(after.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Max commutator norm over effect pairs.
pub fn commutativity_check(povm: &Povm) -> f64 {
    let all_diag = povm.effects.iter().all(|e| matches!(e, Effect::Diagonal(_)));
    if all_diag {
        return 0.0;
    }
    let dense: Vec<Array2<Complex64>> = povm.effects.iter().map(|e| e.to_dense()).collect();
    let mut worst = 0.0_f64;
    for i in 0..dense.len() {
        for j in (i + 1)..dense.len() {
            let ab = dense[i].dot(&dense[j]);
            let ba = dense[j].dot(&dense[i]);
            worst = worst.max(linalg::max_abs_diff(&ab, &ba));
        }
    }
    worst
}

/// Worst-case deviation from certainty when the scheme is immediately
/// repeated on each conditional state with a fresh probe.
///
/// Cells with probability below [`CONDITIONING_FLOOR`] are skipped.
pub fn repeatability_check(
    scheme: &MeasurementScheme,
    object_state: &WaveFunction,
) -> Result<f64> {
    let stats = pointer_statistics(scheme, object_state)?;
    let mut worst = 0.0_f64;
    for (j, &p) in stats.iter().enumerate() {
        if p <= CONDITIONING_FLOOR {
            continue;
        }
        let (_, rho) = conditional_object_state(scheme, object_state, j)?;
        let second = pointer_statistics_mixed(scheme, &rho)?;
        worst = worst.max((second[j] - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::normal_cdf;
    use approx::assert_abs_diff_eq;

    fn hb() -> PlanckConstant {
        PlanckConstant::default()
    }

    fn two_level_observable(space: &GridSpace) -> DiscreteObservable {
        // Position-diagonal observable: eigenvalue -1 on the left half of
        // the grid, +1 on the right half.
        let n = space.n_points();
        let mut p_minus = Array2::<Complex64>::zeros((n, n));
        let mut p_plus = Array2::<Complex64>::zeros((n, n));
        for k in 0..n {
            if space.position(k) < 0.0 {
                p_minus[[k, k]] = Complex64::new(1.0, 0.0);
            } else {
                p_plus[[k, k]] = Complex64::new(1.0, 0.0);
            }
        }
        DiscreteObservable::new(space.clone(), vec![-1.0, 1.0], vec![p_minus, p_plus]).unwrap()
    }

    fn gaussian_probe(space: &GridSpace, sigma2: f64) -> WaveFunction {
        WaveFunction::gaussian(space, 0.0, 0.0, sigma2, hb()).unwrap()
    }

    fn position_scheme(lambda: f64, n: usize, l: f64, sigma2: f64) -> MeasurementScheme {
        let object = GridSpace::new(n, l).unwrap();
        let probe = GridSpace::new(n, l).unwrap();
        let cells = Partition::uniform_cover(&object, 8).unwrap();
        MeasurementScheme::standard_position(
            object,
            gaussian_probe(&probe, sigma2),
            lambda,
            cells,
            hb(),
        )
        .unwrap()
    }

    #[test]
    fn zero_coupling_evolution_is_identity() {
        let scheme = position_scheme(0.0, 64, 24.0, 0.5);
        let psi = WaveFunction::gaussian(scheme.object_space(), 1.0, 0.0, 0.8, hb()).unwrap();
        let evolved = evolve_scheme(&scheme, &psi).unwrap();
        let product = WaveFunction::tensor(&[&psi, scheme.probe_state()]);
        for (a, b) in evolved.amplitudes().iter().zip(product.amplitudes().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_statistics_are_object_independent() {
        let scheme = position_scheme(0.0, 64, 24.0, 0.5);
        let psi1 = WaveFunction::gaussian(scheme.object_space(), 1.0, 0.0, 0.8, hb()).unwrap();
        let psi2 = WaveFunction::gaussian(scheme.object_space(), -2.0, 0.5, 0.3, hb()).unwrap();
        let p1 = pointer_statistics(&scheme, &psi1).unwrap();
        let p2 = pointer_statistics(&scheme, &psi2).unwrap();
        for (a, b) in p1.iter().zip(p2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let probe_profile = scheme.probe_state().profile().unwrap();
        for (j, cell) in scheme.pointer().cells.cells().iter().enumerate() {
            assert_abs_diff_eq!(
                p1[j],
                probe_profile.cell_mass(cell.lo, cell.hi),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn point_mass_object_translates_probe() {
        let object = GridSpace::new(64, 24.0).unwrap();
        let probe = GridSpace::new(64, 24.0).unwrap();
        let cells = Partition::uniform_cover(&object, 8).unwrap();
        let scheme = MeasurementScheme::standard_position(
            object.clone(),
            gaussian_probe(&probe, 0.5),
            1.0,
            cells,
            hb(),
        )
        .unwrap();
        let k0 = 32 + 3;
        let mut v = vec![Complex64::default(); 64];
        v[k0] = Complex64::new(1.0 / object.spacing().sqrt(), 0.0);
        let psi = WaveFunction::from_samples(object.clone(), v).unwrap();
        let evolved = evolve_scheme(&scheme, &psi).unwrap();
        let q0 = object.position(k0);
        let probe_want = WaveFunction::gaussian(&probe, q0, 0.0, 0.5, hb()).unwrap();
        for m in 0..64 {
            let got = evolved.amplitudes()[IxDyn(&[k0, m])];
            let want = psi.amplitudes()[IxDyn(&[k0])] * probe_want.amplitudes()[IxDyn(&[m])];
            assert!((got - want).norm() < 1e-9, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn discrete_two_eigenvalue_branches_match_direct_sum() {
        let object = GridSpace::new(4, 4.0).unwrap();
        let probe = GridSpace::new(128, 24.0).unwrap();
        let a = two_level_observable(&object);
        let probe_state = gaussian_probe(&probe, 0.25);
        let cells = Partition::from_boundaries(&[-12.0, 0.0, 12.0]).unwrap();
        let pointer = PointerSpec::position(cells, 1.0).with_pointer_values(vec![-1.0, 1.0]);
        let scheme = MeasurementScheme::new(
            object.clone(),
            probe_state,
            pointer,
            Coupling::ConjugateShift {
                observable: ShiftObservable::Discrete(a),
                lambda: 1.0,
            },
            hb(),
        )
        .unwrap();

        let mut v = vec![Complex64::default(); 4];
        let amp = Complex64::new(0.5_f64.sqrt(), 0.0); // 1/sqrt(2 dx) with dx = 1
        v[0] = amp; // position -2 -> eigenvalue -1
        v[3] = amp; // position +1 -> eigenvalue +1
        let psi = WaveFunction::from_samples(object.clone(), v).unwrap();
        let evolved = evolve_scheme(&scheme, &psi).unwrap();

        let minus = WaveFunction::gaussian(&probe, -1.0, 0.0, 0.25, hb()).unwrap();
        let plus = WaveFunction::gaussian(&probe, 1.0, 0.0, 0.25, hb()).unwrap();
        for m in 0..128 {
            let got_minus = evolved.amplitudes()[IxDyn(&[0, m])];
            let want_minus = psi.amplitudes()[IxDyn(&[0])] * minus.amplitudes()[IxDyn(&[m])];
            assert!((got_minus - want_minus).norm() < 1e-10);
            let got_plus = evolved.amplitudes()[IxDyn(&[3, m])];
            let want_plus = psi.amplitudes()[IxDyn(&[3])] * plus.amplitudes()[IxDyn(&[m])];
            assert!((got_plus - want_plus).norm() < 1e-10);
        }
        assert_abs_diff_eq!(evolved.norm(), 1.0, epsilon = 1e-10);

        // Half-line cell masses are Gaussian tails of the shifted branches.
        let p = pointer_statistics(&scheme, &psi).unwrap();
        let tail = normal_cdf(-1.0 / 0.5);
        assert_abs_diff_eq!(p[0], 0.5 * (1.0 - tail) + 0.5 * tail, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn localization_guard_rejects_runaway_shifts() {
        let object = GridSpace::new(64, 24.0).unwrap();
        let probe = GridSpace::new(64, 24.0).unwrap();
        let cells = Partition::uniform_cover(&object, 4).unwrap();
        let scheme = MeasurementScheme::standard_position(
            object.clone(),
            gaussian_probe(&probe, 0.5),
            3.0,
            cells,
            hb(),
        )
        .unwrap();
        let psi = WaveFunction::gaussian(&object, 3.5, 0.0, 0.5, hb()).unwrap();
        assert!(matches!(
            evolve_scheme(&scheme, &psi),
            Err(LabError::Localization { .. })
        ));
    }

    #[test]
    fn extraction_matches_statistics_for_all_states() {
        let scheme = position_scheme(1.0, 48, 24.0, 0.5);
        let povm = extract_povm(&scheme, 48).unwrap();
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.4, 0.6, 0.7, hb()).unwrap();
        let direct = pointer_statistics(&scheme, &psi).unwrap();
        let via_povm = povm.probabilities(&psi);
        for (a, b) in direct.iter().zip(via_povm.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        povm.validate(1e-8).unwrap();
    }

    #[test]
    fn zero_coupling_effects_are_multiples_of_identity() {
        let scheme = position_scheme(0.0, 32, 16.0, 0.5);
        let povm = extract_povm(&scheme, 32).unwrap();
        let probe_profile = scheme.probe_state().profile().unwrap();
        for (j, e) in povm.effects.iter().enumerate() {
            let cell = povm.cells.cells()[j];
            let want = probe_profile.cell_mass(cell.lo, cell.hi);
            let m = e.to_dense();
            for a in 0..32 {
                for b in 0..32 {
                    let expect = if a == b {
                        Complex64::new(want, 0.0)
                    } else {
                        Complex64::default()
                    };
                    assert!((m[[a, b]] - expect).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reduced_states_at_zero_coupling_are_pure_inputs() {
        let scheme = position_scheme(0.0, 48, 20.0, 0.5);
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.5, 0.0, 0.6, hb()).unwrap();
        let (apparatus, object) = reduced_states(&scheme, &psi).unwrap();
        assert_abs_diff_eq!(apparatus.purity(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(object.purity(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            apparatus.fidelity_pure(scheme.probe_state()),
            1.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(object.fidelity_pure(&psi), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn entangling_coupling_mixes_the_object() {
        let scheme = position_scheme(1.0, 48, 20.0, 0.25);
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 1.0, hb()).unwrap();
        let (apparatus, object) = reduced_states(&scheme, &psi).unwrap();
        assert!(object.purity() < 1.0 - 1e-3);
        assert!(object.purity() <= 1.0 + 1e-9);
        apparatus.validate().unwrap();
        object.validate().unwrap();
    }

    #[test]
    fn conditional_state_at_zero_coupling_is_input_projector() {
        let scheme = position_scheme(0.0, 32, 16.0, 0.5);
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.3, 0.0, 0.5, hb()).unwrap();
        let stats = pointer_statistics(&scheme, &psi).unwrap();
        for (j, &p) in stats.iter().enumerate() {
            if p <= 1e-9 {
                continue;
            }
            let (prob, rho) = conditional_object_state(&scheme, &psi, j).unwrap();
            assert_abs_diff_eq!(prob, p, epsilon = 1e-12);
            assert_abs_diff_eq!(rho.fidelity_pure(&psi), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn conditional_probabilities_sum_to_one_and_average_to_reduced() {
        let scheme = position_scheme(1.0, 48, 24.0, 0.5);
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 0.8, hb()).unwrap();
        let stats = pointer_statistics(&scheme, &psi).unwrap();
        let total: f64 = stats.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);

        let (_, t_state) = reduced_states(&scheme, &psi).unwrap();
        let n = scheme.object_space().n_points();
        let mut avg = Array2::<Complex64>::zeros((n, n));
        for (j, &p) in stats.iter().enumerate() {
            if p <= CONDITIONING_FLOOR {
                continue;
            }
            let (prob, rho) = conditional_object_state(&scheme, &psi, j).unwrap();
            assert_abs_diff_eq!(prob, p, epsilon = 1e-10);
            avg += &rho.matrix().mapv(|z| z * Complex64::new(prob, 0.0));
        }
        assert!(linalg::max_abs_diff(&avg, t_state.matrix()) < 1e-8);
    }

    #[test]
    fn repeatability_of_uncoupled_scheme_is_maximal() {
        let scheme = position_scheme(0.0, 32, 16.0, 0.5);
        let psi = WaveFunction::gaussian(scheme.object_space(), 0.0, 0.0, 0.5, hb()).unwrap();
        let stats = pointer_statistics(&scheme, &psi).unwrap();
        let want = stats
            .iter()
            .filter(|&&p| p > CONDITIONING_FLOOR)
            .map(|&p| (p - 1.0).abs())
            .fold(0.0, f64::max);
        let got = repeatability_check(&scheme, &psi).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn commutativity_detects_noncommuting_effects() {
        // A sigma_x-like / sigma_y-like pair embedded on a 4-point grid.
        let mut e1 = Array2::<Complex64>::zeros((4, 4));
        let mut e2 = Array2::<Complex64>::zeros((4, 4));
        for k in 0..4 {
            e1[[k, k]] = Complex64::new(0.5, 0.0);
            e2[[k, k]] = Complex64::new(0.5, 0.0);
        }
        e1[[0, 1]] = Complex64::new(0.5, 0.0);
        e1[[1, 0]] = Complex64::new(0.5, 0.0);
        e2[[0, 1]] = Complex64::new(0.0, -0.5);
        e2[[1, 0]] = Complex64::new(0.0, 0.5);
        let povm = Povm {
            cells: Partition::from_boundaries(&[0.0, 1.0, 2.0]).unwrap(),
            pointer_values: vec![0.5, 1.5],
            effects: vec![Effect::Dense(e1), Effect::Dense(e2)],
        };
        let c = commutativity_check(&povm);
        assert_abs_diff_eq!(c, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_povms_commute_exactly() {
        let povm = Povm {
            cells: Partition::from_boundaries(&[0.0, 1.0, 2.0]).unwrap(),
            pointer_values: vec![0.5, 1.5],
            effects: vec![
                Effect::Diagonal(Array1::from_elem(8, 0.3)),
                Effect::Diagonal(Array1::from_elem(8, 0.7)),
            ],
        };
        assert_eq!(commutativity_check(&povm), 0.0);
    }
}
