//! Discrete-observable standard schemes.
//!
//! For `A = sum_i a_i P_i` the conjugate-shift coupling splits the probe into
//! translated copies `phi(. - lambda a_i)`, and the measured effects have the
//! closed form `E_j = sum_i p^Z_{phi_i}(scale * cell_j) P_i`: weighted means
//! of the spectral projections.  When the probe is compactly supported and
//! the eigenvalue gaps beat the support width, the weights collapse to
//! `delta_ij` and the scheme measures the sharp observable itself --
//! repeatably.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{GridSpace, Interval, Partition};
use crate::hbar::PlanckConstant;
use crate::linalg;
use crate::scheme::{
    Coupling, Effect, MeasurementScheme, PointerSpec, Povm, ShiftObservable,
};
use crate::state::WaveFunction;

/// A discrete sharp observable `A = sum_i a_i P_i` on the object grid.
#[derive(Debug, Clone)]
pub struct DiscreteObservable {
    space: GridSpace,
    eigenvalues: Vec<f64>,
    projections: Vec<Array2<Complex64>>,
}

impl DiscreteObservable {
    /// Validate a projector family: each `P_i` Hermitian and idempotent,
    /// mutually orthogonal, summing to the identity (all within 1e-10).
    pub fn new(
        space: GridSpace,
        eigenvalues: Vec<f64>,
        projections: Vec<Array2<Complex64>>,
    ) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != projections.len() {
            return Err(LabError::InvalidArgument(
                "need one projector per eigenvalue".into(),
            ));
        }
        for (i, a) in eigenvalues.iter().enumerate() {
            for b in eigenvalues.iter().skip(i + 1) {
                if (a - b).abs() < 1e-12 {
                    return Err(LabError::InvalidArgument(format!(
                        "eigenvalues must be distinct, found {a} twice"
                    )));
                }
            }
        }
        let n = space.n_points();
        let mut sum = Array2::<Complex64>::zeros((n, n));
        for (i, p) in projections.iter().enumerate() {
            if p.nrows() != n || p.ncols() != n {
                return Err(LabError::SpaceMismatch(format!(
                    "projector {i} is {}x{} on a {n}-point grid",
                    p.nrows(),
                    p.ncols()
                )));
            }
            if linalg::hermiticity_defect(p) > 1e-10 {
                return Err(LabError::InvalidArgument(format!(
                    "projector {i} is not Hermitian"
                )));
            }
            let pp = p.dot(p);
            if linalg::max_abs_diff(&pp, p) > 1e-10 {
                return Err(LabError::InvalidArgument(format!(
                    "projector {i} is not idempotent"
                )));
            }
            for (j, q) in projections.iter().enumerate() {
                if i != j {
                    let pq = p.dot(q);
                    if linalg::max_abs(&pq) > 1e-10 {
                        return Err(LabError::InvalidArgument(format!(
                            "projectors {i} and {j} are not orthogonal"
                        )));
                    }
                }
            }
            sum += p;
        }
        if linalg::max_abs_diff(&sum, &linalg::identity(n)) > 1e-10 {
            return Err(LabError::InvalidArgument(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(DiscreteObservable {
            space,
            eigenvalues,
            projections,
        })
    }

    /// Spectral decomposition of a position-diagonal operator: grid points
    /// sharing a sample value (within `tol`) are grouped into one projector.
    pub fn from_position_samples(space: GridSpace, samples: &[f64], tol: f64) -> Result<Self> {
        if samples.len() != space.n_points() {
            return Err(LabError::SpaceMismatch(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                space.n_points()
            )));
        }
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, &v) in samples.iter().enumerate() {
            match eigenvalues.iter().position(|&e| (e - v).abs() <= tol) {
                Some(g) => groups[g].push(k),
                None => {
                    eigenvalues.push(v);
                    groups.push(vec![k]);
                }
            }
        }
        let n = space.n_points();
        let projections = groups
            .iter()
            .map(|g| {
                let mut p = Array2::<Complex64>::zeros((n, n));
                for &k in g {
                    p[[k, k]] = Complex64::new(1.0, 0.0);
                }
                p
            })
            .collect();
        DiscreteObservable::new(space, eigenvalues, projections)
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[Array2<Complex64>] {
        &self.projections
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Smallest gap between distinct eigenvalues, with the pair realizing it.
    pub fn min_gap(&self) -> (f64, f64, f64) {
        let mut sorted = self.eigenvalues.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for w in sorted.windows(2) {
            let gap = w[1] - w[0];
            if gap < best.0 {
                best = (gap, w[0], w[1]);
            }
        }
        best
    }
}

/// Default pointer cells for a discrete scheme: boundaries halfway between
/// consecutive scaled eigenvalues, extended to the pointer range.
fn default_cells(
    a: &DiscreteObservable,
    probe_space: &GridSpace,
    scale: f64,
) -> (Partition, Vec<f64>) {
    let mut order: Vec<usize> = (0..a.eigenvalues().len()).collect();
    order.sort_by(|&i, &j| a.eigenvalues()[i].partial_cmp(&a.eigenvalues()[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| a.eigenvalues()[i]).collect();
    let half_range = probe_space.box_length() / (2.0 * scale.abs());
    let mut boundaries = vec![-half_range];
    for w in sorted.windows(2) {
        boundaries.push(0.5 * (w[0] + w[1]));
    }
    boundaries.push(half_range);
    let cells = Partition::from_boundaries(&boundaries).expect("sorted boundaries");
    (cells, sorted)
}

/// The standard scheme for a discrete observable: probe translated by
/// `lambda a_i`, probe position read over cells separating the eigenvalues.
pub fn standard_discrete_scheme(
    a: &DiscreteObservable,
    probe_state: &WaveFunction,
    lambda: f64,
    hbar: PlanckConstant,
) -> Result<MeasurementScheme> {
    let probe_space = probe_state.space(0).clone();
    let scale = if lambda == 0.0 { 1.0 } else { lambda };
    let (cells, values) = default_cells(a, &probe_space, scale);
    let pointer = PointerSpec::position(cells, scale).with_pointer_values(values);
    MeasurementScheme::new(
        a.space().clone(),
        probe_state.clone(),
        pointer,
        Coupling::ConjugateShift {
            observable: ShiftObservable::Discrete(a.clone()),
            lambda,
        },
        hbar,
    )
}

/// Same scheme with an explicit cell partition (object-value units).
pub fn standard_discrete_scheme_with_cells(
    a: &DiscreteObservable,
    probe_state: &WaveFunction,
    lambda: f64,
    cells: Partition,
    pointer_values: Vec<f64>,
    hbar: PlanckConstant,
) -> Result<MeasurementScheme> {
    let scale = if lambda == 0.0 { 1.0 } else { lambda };
    let pointer = PointerSpec::position(cells, scale).with_pointer_values(pointer_values);
    MeasurementScheme::new(
        a.space().clone(),
        probe_state.clone(),
        pointer,
        Coupling::ConjugateShift {
            observable: ShiftObservable::Discrete(a.clone()),
            lambda,
        },
        hbar,
    )
}

/// Closed-form measured effects `E_j = sum_i p^Z_{phi_i}(scale*cell_j) P_i`.
pub fn measured_effects_discrete(
    scheme: &MeasurementScheme,
    a: &DiscreteObservable,
) -> Result<Povm> {
    match scheme.coupling() {
        Coupling::ConjugateShift {
            observable: ShiftObservable::Discrete(d),
            ..
        } => {
            if d.eigenvalues() != a.eigenvalues() {
                return Err(LabError::InvalidArgument(
                    "scheme was built for a different observable".into(),
                ));
            }
        }
        _ => {
            return Err(LabError::InvalidArgument(
                "scheme does not couple a discrete observable".into(),
            ))
        }
    }
    let branches = scheme.branch_set().expect("conjugate-shift scheme");
    let w = scheme.branch_cell_masses(&branches);
    let n = a.space().n_points();
    let nc = scheme.pointer().cells.len();
    let mut effects = Vec::with_capacity(nc);
    for j in 0..nc {
        let mut m = Array2::<Complex64>::zeros((n, n));
        for (i, p) in a.projections().iter().enumerate() {
            let weight = Complex64::new(w[[i, j]], 0.0);
            if weight == Complex64::default() {
                continue;
            }
            m += &p.mapv(|z| z * weight);
        }
        effects.push(Effect::Dense(m));
    }
    Ok(Povm {
        cells: scheme.pointer().cells.clone(),
        pointer_values: scheme.pointer().pointer_values.clone(),
        effects,
    })
}

/// A calibrated scheme that measures the sharp observable exactly.
///
/// The probe is a bump supported in `(-delta/2, delta/2)`; pointer cells are
/// `(a_i - delta/(2 lambda), a_i + delta/(2 lambda))`, padded with dead cells
/// between eigenvalues so the partition still covers the pointer range.
/// Requires every eigenvalue gap to exceed `delta / lambda`.
pub fn calibrated_von_neumann_scheme(
    a: &DiscreteObservable,
    delta: f64,
    lambda: f64,
    probe_space: &GridSpace,
    hbar: PlanckConstant,
) -> Result<(MeasurementScheme, Vec<f64>)> {
    if !(delta > 0.0) || !(lambda > 0.0) {
        return Err(LabError::InvalidArgument(
            "delta and lambda must be positive".into(),
        ));
    }
    let (gap, lo, hi) = a.min_gap();
    if a.len() > 1 && gap <= delta / lambda {
        return Err(LabError::Calibration {
            a: lo,
            b: hi,
            gap,
            required: delta / lambda,
        });
    }
    let probe_state = WaveFunction::bump(probe_space, 0.0, delta / 2.0)?;

    // Eigenvalue cells plus the gaps between them, covering the pointer range.
    let half_width = delta / (2.0 * lambda);
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a.eigenvalues()[i].partial_cmp(&a.eigenvalues()[j]).unwrap());
    let half_range = probe_space.box_length() / (2.0 * lambda);
    let mut cells: Vec<Interval> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut cursor = -half_range;
    for &i in &order {
        let ai = a.eigenvalues()[i];
        let lo_i = ai - half_width;
        let hi_i = ai + half_width;
        if lo_i < cursor - 1e-12 {
            return Err(LabError::InvalidArgument(format!(
                "eigenvalue cell around {ai} leaves the pointer range"
            )));
        }
        if lo_i > cursor + 1e-12 {
            cells.push(Interval::new(cursor, lo_i));
            values.push(0.5 * (cursor + lo_i));
        }
        cells.push(Interval::new(lo_i, hi_i));
        values.push(ai);
        cursor = hi_i;
    }
    if cursor < half_range - 1e-12 {
        cells.push(Interval::new(cursor, half_range));
        values.push(0.5 * (cursor + half_range));
    }
    let partition = Partition::new(cells)?;
    let scheme = standard_discrete_scheme_with_cells(
        a,
        &probe_state,
        lambda,
        partition,
        values.clone(),
        hbar,
    )?;
    Ok((scheme, values))
}

/// Max-norm deviation of each eigenvalue effect from its projector.
///
/// Dead cells (no eigenvalue assigned) are required to carry (near-)zero
/// effects and count toward the deviation.
pub fn calibration_defect(povm: &Povm, a: &DiscreteObservable) -> f64 {
    let mut worst = 0.0_f64;
    for (j, e) in povm.effects.iter().enumerate() {
        let m = e.to_dense();
        let target = a
            .eigenvalues()
            .iter()
            .position(|&ev| (ev - povm.pointer_values[j]).abs() < 1e-9);
        match target {
            Some(i) => worst = worst.max(linalg::max_abs_diff(&m, &a.projections()[i])),
            None => worst = worst.max(linalg::max_abs(&m)),
        }
    }
    worst
}
