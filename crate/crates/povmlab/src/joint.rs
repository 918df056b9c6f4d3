//! The joint position-momentum measurement model.
//!
//! Two probes couple simultaneously to the object,
//!
//! ```text
//! U = exp( -(i/hbar) lambda Q (x) P1 (x) I2  +  (i/hbar) mu P (x) I1 (x) Q2 ),
//! ```
//!
//! probe 1's position and probe 2's momentum are read out, and the outcome
//! statistics define a phase-space POVM.  In the position representation the
//! evolved state is
//!
//! ```text
//! Psi(q, xi1, xi2) = phi(q + mu xi2) phi1(xi1 - lambda q - (lambda mu / 2) xi2) phi2(xi2),
//! ```
//!
//! realized here as three exact conditional translations (index rolls where
//! the shifts land on the grid, spectral phases otherwise).  The cross term
//! `(lambda mu / 2) xi2` inside probe 1's argument is the source of the
//! mutual-disturbance part of the inaccuracy budget and is kept exactly.
//!
//! The marginal confidence functions pick up each other's couplings,
//!
//! ```text
//! Var(e) = Var(Q1)/lambda^2 + (mu^2/4) Var(Q2),
//! Var(f) = Var(P2)/mu^2     + (lambda^2/4) Var(P1),
//! ```
//!
//! and the product `Var(e) Var(f) = Q + D` is bounded below by `hbar^2/4`.

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::continuous::{smeared_position_povm, ConfidenceFunction};
use crate::error::{LabError, Result};
use crate::fourier::{self, convolve_densities};
use crate::grid::{GridSpace, Interval, Partition};
use crate::hbar::PlanckConstant;
use crate::operator::{moments, HermitianOperator};
use crate::state::{DensityOperator, WaveFunction};

/// A three-body joint measurement scheme.
#[derive(Debug, Clone)]
pub struct JointScheme {
    object_space: GridSpace,
    probe1_state: WaveFunction,
    probe2_state: WaveFunction,
    lambda: f64,
    mu: f64,
    hbar: PlanckConstant,
    cells_q: Partition,
    cells_p: Partition,
}

impl JointScheme {
    /// Build a joint scheme.  Both couplings must be nonzero (switching one
    /// off is reserved for the marginal-recovery operations), and the outcome
    /// partitions must tile the two pointer ranges exactly once.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        object_space: GridSpace,
        probe1_state: WaveFunction,
        probe2_state: WaveFunction,
        lambda: f64,
        mu: f64,
        hbar: PlanckConstant,
        cells_q: Partition,
        cells_p: Partition,
    ) -> Result<Self> {
        if lambda == 0.0 || mu == 0.0 || !lambda.is_finite() || !mu.is_finite() {
            return Err(LabError::InvalidScheme(format!(
                "joint regime requires nonzero couplings, got lambda={lambda}, mu={mu}"
            )));
        }
        for (name, p) in [("probe1", &probe1_state), ("probe2", &probe2_state)] {
            if p.n_factors() != 1 {
                return Err(LabError::InvalidScheme(format!(
                    "{name} state must live on a single grid"
                )));
            }
            if (p.norm() - 1.0).abs() > 1e-9 {
                return Err(LabError::InvalidScheme(format!(
                    "{name} state norm {} != 1",
                    p.norm()
                )));
            }
        }
        let scheme = JointScheme {
            object_space,
            probe1_state,
            probe2_state,
            lambda,
            mu,
            hbar,
            cells_q,
            cells_p,
        };
        let q_range = scheme.position_pointer_range();
        let p_range = scheme.momentum_pointer_range();
        check_tiles(&scheme.cells_q, q_range, "position")?;
        check_tiles(&scheme.cells_p, p_range, "momentum")?;
        Ok(scheme)
    }

    /// Joint scheme with uniform outcome grids covering both pointer ranges.
    #[allow(clippy::too_many_arguments)]
    pub fn with_uniform_cells(
        object_space: GridSpace,
        probe1_state: WaveFunction,
        probe2_state: WaveFunction,
        lambda: f64,
        mu: f64,
        hbar: PlanckConstant,
        n_cells_q: usize,
        n_cells_p: usize,
    ) -> Result<Self> {
        if lambda == 0.0 || mu == 0.0 || !lambda.is_finite() || !mu.is_finite() {
            return Err(LabError::InvalidScheme(format!(
                "joint regime requires nonzero couplings, got lambda={lambda}, mu={mu}"
            )));
        }
        let p1 = probe1_state.space(0).clone();
        let p2 = probe2_state.space(0).clone();
        let q_half = p1.box_length() / (2.0 * lambda.abs());
        let p_half = p2.momentum_spacing(hbar) * p2.n_points() as f64 / (2.0 * mu.abs());
        let cells_q = uniform_partition(-q_half, q_half, n_cells_q)?;
        let cells_p = uniform_partition(-p_half, p_half, n_cells_p)?;
        JointScheme::new(
            object_space,
            probe1_state,
            probe2_state,
            lambda,
            mu,
            hbar,
            cells_q,
            cells_p,
        )
    }

    pub fn object_space(&self) -> &GridSpace {
        &self.object_space
    }

    pub fn probe1_state(&self) -> &WaveFunction {
        &self.probe1_state
    }

    pub fn probe2_state(&self) -> &WaveFunction {
        &self.probe2_state
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn hbar(&self) -> PlanckConstant {
        self.hbar
    }

    pub fn cells_q(&self) -> &Partition {
        &self.cells_q
    }

    pub fn cells_p(&self) -> &Partition {
        &self.cells_p
    }

    /// Width of the object-value range the position pointer can resolve.
    pub fn position_pointer_range(&self) -> f64 {
        self.probe1_state.space(0).box_length() / self.lambda.abs()
    }

    /// Width of the object-momentum range the momentum pointer can resolve.
    pub fn momentum_pointer_range(&self) -> f64 {
        let p2 = self.probe2_state.space(0);
        p2.momentum_spacing(self.hbar) * p2.n_points() as f64 / self.mu.abs()
    }

    /// Scheme with translated outcome cells (used by the covariance check).
    pub fn with_translated_cells(&self, dq: f64, dp: f64) -> Result<JointScheme> {
        JointScheme::new(
            self.object_space.clone(),
            self.probe1_state.clone(),
            self.probe2_state.clone(),
            self.lambda,
            self.mu,
            self.hbar,
            self.cells_q.translated(dq),
            self.cells_p.translated(dp),
        )
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

fn uniform_partition(lo: f64, hi: f64, n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(LabError::InvalidArgument("need at least one cell".into()));
    }
    let w = (hi - lo) / n as f64;
    let boundaries: Vec<f64> = (0..=n).map(|i| lo + i as f64 * w).collect();
    Partition::from_boundaries(&boundaries)
}

fn check_tiles(cells: &Partition, range: f64, which: &str) -> Result<()> {
    let span = cells.cells()[cells.len() - 1].hi - cells.cells()[0].lo;
    if (span - range).abs() > 1e-6 * range {
        return Err(LabError::Coverage(format!(
            "{which} partition spans {span}, pointer range is {range}"
        )));
    }
    cells.check_covers(cells.cells()[0].lo, cells.cells()[0].lo + span, 1e-9 * range)
}

// ---------------------------------------------------------------------------
// Evolution.
// ---------------------------------------------------------------------------

/// In-place FFT along one axis of a rank-3 tensor stored row-major.
fn fft_axis(
    data: &mut [Complex64],
    dims: [usize; 3],
    axis: usize,
    plan: &std::sync::Arc<dyn rustfft::Fft<f64>>,
    normalize: bool,
) {
    let [n0, n1, n2] = dims;
    let n = dims[axis];
    let mut buf = vec![Complex64::default(); n];
    let scale = if normalize { 1.0 / n as f64 } else { 1.0 };
    match axis {
        0 => {
            for k1 in 0..n1 {
                for k2 in 0..n2 {
                    let base = k1 * n2 + k2;
                    for k0 in 0..n0 {
                        buf[k0] = data[k0 * n1 * n2 + base];
                    }
                    plan.process(&mut buf);
                    for k0 in 0..n0 {
                        data[k0 * n1 * n2 + base] = buf[k0] * scale;
                    }
                }
            }
        }
        1 => {
            for k0 in 0..n0 {
                for k2 in 0..n2 {
                    let base = k0 * n1 * n2 + k2;
                    for k1 in 0..n1 {
                        buf[k1] = data[base + k1 * n2];
                    }
                    plan.process(&mut buf);
                    for k1 in 0..n1 {
                        data[base + k1 * n2] = buf[k1] * scale;
                    }
                }
            }
        }
        2 => {
            for k0 in 0..n0 {
                for k1 in 0..n1 {
                    let base = (k0 * n1 + k1) * n2;
                    buf.copy_from_slice(&data[base..base + n2]);
                    plan.process(&mut buf);
                    for k2 in 0..n2 {
                        data[base + k2] = buf[k2] * scale;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Core three-body evolution with explicit couplings (the scheme wrapper
/// enforces the joint regime; marginal recovery may zero one coupling here).
pub fn evolve_joint_with(
    object_state: &WaveFunction,
    probe1_state: &WaveFunction,
    probe2_state: &WaveFunction,
    lambda: f64,
    mu: f64,
    hbar: PlanckConstant,
) -> Result<WaveFunction> {
    evolve_joint_raw(
        object_state,
        probe1_state,
        probe2_state,
        lambda,
        mu,
        hbar,
        true,
    )
}

/// Evolution with the probe-1 cross shift optionally disabled.  Disabling it
/// breaks the variance decomposition; it exists only for regression tests.
pub fn evolve_joint_raw(
    object_state: &WaveFunction,
    probe1_state: &WaveFunction,
    probe2_state: &WaveFunction,
    lambda: f64,
    mu: f64,
    hbar: PlanckConstant,
    include_cross_term: bool,
) -> Result<WaveFunction> {
    let composite = WaveFunction::tensor(&[object_state, probe1_state, probe2_state]);
    let s0 = object_state.space(0).clone();
    let s1 = probe1_state.space(0).clone();
    let s2 = probe2_state.space(0).clone();
    let dims = [s0.n_points(), s1.n_points(), s2.n_points()];
    let mut data: Vec<Complex64> = composite.amplitudes().iter().copied().collect();
    let h = hbar.value();

    let fw0 = fourier::plan_forward(dims[0]);
    let iv0 = fourier::plan_inverse(dims[0]);
    let fw1 = fourier::plan_forward(dims[1]);
    let iv1 = fourier::plan_inverse(dims[1]);

    let xi2: Vec<f64> = s2.positions();
    let q: Vec<f64> = s0.positions();
    let p0: Vec<f64> = s0.momenta_fft(hbar);
    let p1: Vec<f64> = s1.momenta_fft(hbar);

    // Pass 1: xi1 <- xi1 - (lambda mu / 2) xi2, conditioned on xi2.
    if include_cross_term && lambda * mu != 0.0 {
        fft_axis(&mut data, dims, 1, &fw1, false);
        for k0 in 0..dims[0] {
            for m1 in 0..dims[1] {
                let base = (k0 * dims[1] + m1) * dims[2];
                for k2 in 0..dims[2] {
                    let shift = 0.5 * lambda * mu * xi2[k2];
                    let phase = Complex64::from_polar(1.0, -p1[m1] * shift / h);
                    data[base + k2] *= phase;
                }
            }
        }
        fft_axis(&mut data, dims, 1, &iv1, true);
    }

    // Pass 2: q <- q + mu xi2 (phi(q + mu xi2)),   conditioned on xi2.
    if mu != 0.0 {
        fft_axis(&mut data, dims, 0, &fw0, false);
        for m0 in 0..dims[0] {
            for k1 in 0..dims[1] {
                let base = (m0 * dims[1] + k1) * dims[2];
                for k2 in 0..dims[2] {
                    let phase = Complex64::from_polar(1.0, p0[m0] * mu * xi2[k2] / h);
                    data[base + k2] *= phase;
                }
            }
        }
        fft_axis(&mut data, dims, 0, &iv0, true);
    }

    // Pass 3: xi1 <- xi1 - lambda q, conditioned on q.
    if lambda != 0.0 {
        fft_axis(&mut data, dims, 1, &fw1, false);
        for k0 in 0..dims[0] {
            for m1 in 0..dims[1] {
                let phase = Complex64::from_polar(1.0, -p1[m1] * lambda * q[k0] / h);
                let base = (k0 * dims[1] + m1) * dims[2];
                for k2 in 0..dims[2] {
                    data[base + k2] *= phase;
                }
            }
        }
        fft_axis(&mut data, dims, 1, &iv1, true);
    }

    let arr = ArrayD::from_shape_vec(IxDyn(&dims), data).unwrap();
    let out = WaveFunction::from_parts(vec![s0, s1, s2], arr, None);
    for (factor, name) in [(0, "object"), (1, "probe1"), (2, "probe2")] {
        let mass = out.boundary_mass(factor);
        if mass > crate::state::BOUNDARY_MASS_BOUND {
            return Err(LabError::Localization {
                what: format!("joint evolution, {name} factor"),
                mass,
                bound: crate::state::BOUNDARY_MASS_BOUND,
            });
        }
    }
    Ok(out)
}

/// Apply the scheme's coupling to `object (x) probe1 (x) probe2`.
pub fn evolve_joint(scheme: &JointScheme, object_state: &WaveFunction) -> Result<WaveFunction> {
    scheme.check_object_state(object_state)?;
    evolve_joint_with(
        object_state,
        &scheme.probe1_state,
        &scheme.probe2_state,
        scheme.lambda,
        scheme.mu,
        scheme.hbar,
    )
}

// ---------------------------------------------------------------------------
// Outcome distribution.
// ---------------------------------------------------------------------------

/// Spectral rectangle integration of a 2D density sampled on two centered
/// periodic grids.
struct Spectral2D {
    coeffs: Array2<Complex64>,
    l1: f64,
    l2: f64,
}

impl Spectral2D {
    fn new(density: &Array2<f64>, l1: f64, l2: f64) -> Self {
        let (n1, n2) = density.dim();
        let mut data: Vec<Complex64> = density
            .iter()
            .map(|&d| Complex64::new(d, 0.0))
            .collect();
        // Row FFTs (axis 1), then column FFTs (axis 0).
        let plan2 = fourier::plan_forward(n2);
        for r in 0..n1 {
            plan2.process(&mut data[r * n2..(r + 1) * n2]);
        }
        let plan1 = fourier::plan_forward(n1);
        let mut col = vec![Complex64::default(); n1];
        for c in 0..n2 {
            for r in 0..n1 {
                col[r] = data[r * n2 + c];
            }
            plan1.process(&mut col);
            for r in 0..n1 {
                data[r * n2 + c] = col[r];
            }
        }
        let norm = 1.0 / (n1 * n2) as f64;
        let mut coeffs = Array2::zeros((n1, n2));
        for r in 0..n1 {
            for c in 0..n2 {
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[[r, c]] = data[r * n2 + c] * sign * norm;
            }
        }
        Spectral2D { coeffs, l1, l2 }
    }

    fn mode_factor(m: usize, n: usize, l: f64, cell: &Interval) -> Complex64 {
        let j = if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        };
        if j == 0 {
            return Complex64::new(cell.width(), 0.0);
        }
        let w = 2.0 * std::f64::consts::PI * j as f64 / l;
        (Complex64::from_polar(1.0, w * cell.hi) - Complex64::from_polar(1.0, w * cell.lo))
            / Complex64::new(0.0, w)
    }

    /// Integrals over all rectangles `xs[i] x ys[j]`.
    fn rectangles(&self, xs: &[Interval], ys: &[Interval]) -> Array2<f64> {
        let (n1, n2) = self.coeffs.dim();
        let mut t1 = Array2::<Complex64>::zeros((n1, xs.len()));
        for m in 0..n1 {
            for (i, cell) in xs.iter().enumerate() {
                t1[[m, i]] = Self::mode_factor(m, n1, self.l1, cell);
            }
        }
        let mut t2 = Array2::<Complex64>::zeros((n2, ys.len()));
        for m in 0..n2 {
            for (j, cell) in ys.iter().enumerate() {
                t2[[m, j]] = Self::mode_factor(m, n2, self.l2, cell);
            }
        }
        let inner = self.coeffs.dot(&t2); // (n1, ny)
        let mut out = Array2::zeros((xs.len(), ys.len()));
        for i in 0..xs.len() {
            for j in 0..ys.len() {
                let mut acc = Complex64::default();
                for m in 0..n1 {
                    acc += t1[[m, i]] * inner[[m, j]];
                }
                out[[i, j]] = acc.re;
            }
        }
        out
    }
}

/// The 2D pointer density over probe-1 position and probe-2 momentum, from
/// an evolved three-factor state.
fn pointer_plane_density(scheme: &JointScheme, evolved: &WaveFunction) -> Array2<f64> {
    let n0 = scheme.object_space.n_points();
    let s1 = scheme.probe1_state.space(0);
    let s2 = scheme.probe2_state.space(0);
    let n1 = s1.n_points();
    let n2 = s2.n_points();
    let dims = [n0, n1, n2];
    let mut data: Vec<Complex64> = evolved.amplitudes().iter().copied().collect();
    let plan = fourier::plan_forward(n2);
    fft_axis(&mut data, dims, 2, &plan, false);
    // |Psihat|^2 conversion: dxi2^2 / (2 pi hbar); integration measures dq
    // (summed out) and the (xi1, p2) plane carries dxi1 dp2 cell measure.
    let dq = scheme.object_space.spacing();
    let dxi2 = s2.spacing();
    let conv = dxi2 * dxi2 / (2.0 * std::f64::consts::PI * scheme.hbar.value()) * dq;
    let mut density = Array2::<f64>::zeros((n1, n2));
    for k0 in 0..n0 {
        for k1 in 0..n1 {
            let base = (k0 * n1 + k1) * n2;
            for m2 in 0..n2 {
                // Reorder momentum bins to ascending order.
                let c2 = (m2 + n2 / 2) % n2;
                density[[k1, c2]] += data[base + m2].norm_sqr() * conv;
            }
        }
    }
    density
}

/// Joint outcome probabilities over the scheme's phase-space cells.
pub fn joint_distribution(scheme: &JointScheme, object_state: &WaveFunction) -> Result<Array2<f64>> {
    let evolved = evolve_joint(scheme, object_state)?;
    joint_distribution_from_evolved(scheme, &evolved)
}

fn joint_distribution_from_evolved(
    scheme: &JointScheme,
    evolved: &WaveFunction,
) -> Result<Array2<f64>> {
    let s1 = scheme.probe1_state.space(0);
    let s2 = scheme.probe2_state.space(0);
    let density = pointer_plane_density(scheme, evolved);
    let l1 = s1.box_length();
    let l2 = s2.momentum_spacing(scheme.hbar) * s2.n_points() as f64;
    let spectral = Spectral2D::new(&density, l1, l2);
    let xs: Vec<Interval> = scheme
        .cells_q
        .cells()
        .iter()
        .map(|c| c.scaled(scheme.lambda))
        .collect();
    let ys: Vec<Interval> = scheme
        .cells_p
        .cells()
        .iter()
        .map(|c| c.scaled(scheme.mu))
        .collect();
    let mut dist = spectral.rectangles(&xs, &ys);
    if scheme.lambda < 0.0 {
        // scaled() flips interval orientation; rows stay aligned with cells_q.
    }
    for v in dist.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    Ok(dist)
}

/// Compare the outcome distribution of a displaced object state against the
/// cell-translated distribution of the original.  Returns the max absolute
/// cell deviation; displacements must lie on the object grids.
pub fn covariance_check(
    scheme: &JointScheme,
    object_state: &WaveFunction,
    displacement: (f64, f64),
) -> Result<f64> {
    let (dq, dp) = displacement;
    let displaced = object_state.displaced(dq, dp, scheme.hbar)?;
    // Reading the displaced state on displacement-translated cells must
    // reproduce the original distribution on the base cells.
    let translated_scheme = scheme.with_translated_cells(dq, dp)?;
    let moved = joint_distribution(&translated_scheme, &displaced)?;
    let reference = joint_distribution(scheme, object_state)?;
    Ok(moved
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Confidence functions.
// ---------------------------------------------------------------------------

/// Position-space density of a state at an arbitrary point.
fn position_density_at(state: &WaveFunction, x: f64) -> f64 {
    if let Some(p) = state.profile() {
        return p.density(x);
    }
    // Trigonometric interpolation of the amplitudes.
    let space = state.space(0);
    let n = space.n_points();
    let samples: Vec<Complex64> = state.amplitudes().iter().copied().collect();
    let mut coeffs = samples;
    fourier::plan_forward(n).process(&mut coeffs);
    let l = space.box_length();
    let mut acc = Complex64::default();
    for (m, c) in coeffs.iter().enumerate() {
        let j = if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        };
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let w = 2.0 * std::f64::consts::PI * j as f64 / l;
        acc += c * sign * Complex64::from_polar(1.0 / n as f64, w * x);
    }
    acc.norm_sqr()
}

/// Momentum-space density of a state at an arbitrary momentum.
fn momentum_density_at(state: &WaveFunction, p: f64, hbar: PlanckConstant) -> f64 {
    if let Some(crate::profile::Profile::Gaussian(g)) = state.profile() {
        let sp2 = hbar.value() * hbar.value() / (4.0 * g.sigma2);
        let d = p - g.mean_momentum;
        return (2.0 * std::f64::consts::PI * sp2).powf(-0.5) * (-d * d / (2.0 * sp2)).exp();
    }
    // Direct Fourier sum: psihat(p) = dx/sqrt(2 pi hbar) sum_k psi_k e^{-i p x_k / hbar}.
    let space = state.space(0);
    let dx = space.spacing();
    let h = hbar.value();
    let mut acc = Complex64::default();
    for (k, z) in state.amplitudes().iter().enumerate() {
        acc += z * Complex64::from_polar(1.0, -p * space.position(k) / h);
    }
    (acc * dx / (2.0 * std::f64::consts::PI * h).sqrt()).norm_sqr()
}

/// The undisturbed single-scheme confidence functions `e_o`, `f_o`, obtained
/// by switching off the other coupling.
pub fn undisturbed_confidence_functions(
    scheme: &JointScheme,
) -> Result<(ConfidenceFunction, ConfidenceFunction)> {
    let e_o = position_confidence(scheme, false)?;
    let f_o = momentum_confidence(scheme, false)?;
    Ok((e_o, f_o))
}

/// The joint-model confidence functions `e`, `f`, including each probe's
/// back-action on the other marginal.
pub fn joint_confidence_functions(
    scheme: &JointScheme,
) -> Result<(ConfidenceFunction, ConfidenceFunction)> {
    let e = position_confidence(scheme, true)?;
    let f = momentum_confidence(scheme, true)?;
    Ok((e, f))
}

fn renormalize_density(density: &mut [f64], spacing: f64) {
    let total: f64 = density.iter().sum::<f64>() * spacing;
    density.iter_mut().for_each(|d| *d /= total);
}

fn position_confidence(scheme: &JointScheme, disturbed: bool) -> Result<ConfidenceFunction> {
    let lambda = scheme.lambda;
    let s1 = scheme.probe1_state.space(0);
    let n = s1.n_points();
    let value_space = GridSpace::new(n, s1.box_length() / lambda.abs())?;
    // e_o(v) = lambda |phi1(-lambda v)|^2.
    let mut e_o: Vec<f64> = value_space
        .positions()
        .iter()
        .map(|&v| lambda.abs() * position_density_at(&scheme.probe1_state, -lambda * v))
        .collect();
    renormalize_density(&mut e_o, value_space.spacing());
    if !disturbed {
        return ConfidenceFunction::from_samples(value_space, e_o);
    }
    // Convolve with the scaled probe-2 density (2/mu)|phi2(2v/mu)|^2.
    let mu = scheme.mu;
    let mut g: Vec<f64> = value_space
        .positions()
        .iter()
        .map(|&v| (2.0 / mu.abs()) * position_density_at(&scheme.probe2_state, 2.0 * v / mu))
        .collect();
    renormalize_density(&mut g, value_space.spacing());
    let e = convolve_densities(&e_o, &g, &value_space);
    ConfidenceFunction::from_samples(value_space, e)
}

fn momentum_confidence(scheme: &JointScheme, disturbed: bool) -> Result<ConfidenceFunction> {
    let mu = scheme.mu;
    let hbar = scheme.hbar;
    let s2 = scheme.probe2_state.space(0);
    let n = s2.n_points();
    let p_circle = s2.momentum_spacing(hbar) * n as f64;
    let value_space = GridSpace::new(n, p_circle / mu.abs())?;
    // f_o(u) = mu |phi2hat(-mu u)|^2.
    let mut f_o: Vec<f64> = value_space
        .positions()
        .iter()
        .map(|&u| mu.abs() * momentum_density_at(&scheme.probe2_state, -mu * u, hbar))
        .collect();
    renormalize_density(&mut f_o, value_space.spacing());
    if !disturbed {
        return ConfidenceFunction::from_samples(value_space, f_o);
    }
    // Convolve with the scaled probe-1 momentum density (2/lambda)|phi1hat(2p/lambda)|^2.
    let lambda = scheme.lambda;
    let mut g: Vec<f64> = value_space
        .positions()
        .iter()
        .map(|&u| {
            (2.0 / lambda.abs())
                * momentum_density_at(&scheme.probe1_state, 2.0 * u / lambda, hbar)
        })
        .collect();
    renormalize_density(&mut g, value_space.spacing());
    let f = convolve_densities(&f_o, &g, &value_space);
    ConfidenceFunction::from_samples(value_space, f)
}

// ---------------------------------------------------------------------------
// Marginals and budget.
// ---------------------------------------------------------------------------

/// Max deviation of the simulated marginals from the smeared sharp-observable
/// predictions `(chi_X * e)(Q)` and `(chi_Y * f)(P)`.
pub fn joint_marginal_check(
    scheme: &JointScheme,
    object_state: &WaveFunction,
) -> Result<(f64, f64)> {
    let dist = joint_distribution(scheme, object_state)?;
    let (e, f) = joint_confidence_functions(scheme)?;

    // Position side.
    let povm_x = smeared_position_povm(&e, &scheme.cells_q, &scheme.object_space)?;
    let predicted_x = povm_x.probabilities(object_state);
    let nq = scheme.cells_q.len();
    let np = scheme.cells_p.len();
    let mut dev_q = 0.0_f64;
    for i in 0..nq {
        let marginal: f64 = (0..np).map(|j| dist[[i, j]]).sum();
        dev_q = dev_q.max((marginal - predicted_x[i]).abs());
    }

    // Momentum side: expectation of (chi_Y * f)(P) in the object state.
    let hbar = scheme.hbar;
    let dens_p = object_state.momentum_density(hbar);
    let space = object_state.space(0);
    let dp = space.momentum_spacing(hbar);
    let integ = f.integrator();
    let mut dev_p = 0.0_f64;
    for (j, cell) in scheme.cells_p.cells().iter().enumerate() {
        let marginal: f64 = (0..nq).map(|i| dist[[i, j]]).sum();
        let mut predicted = 0.0;
        for (m, &d) in dens_p.iter().enumerate() {
            let p = space.momentum_fft(m, hbar);
            predicted += d * dp * integ.mass(p - cell.hi, p - cell.lo).clamp(0.0, 1.0);
        }
        dev_p = dev_p.max((marginal - predicted).abs());
    }
    Ok((dev_q, dev_p))
}

/// Numerically measured inaccuracy variances: the outcome-marginal variances
/// minus the object's own position/momentum variances.
pub fn simulated_inaccuracy_variances(
    scheme: &JointScheme,
    object_state: &WaveFunction,
) -> Result<(f64, f64)> {
    let evolved = evolve_joint(scheme, object_state)?;
    let density = pointer_plane_density(scheme, &evolved);
    let s1 = scheme.probe1_state.space(0);
    let s2 = scheme.probe2_state.space(0);
    let (n1, n2) = density.dim();
    let dxi1 = s1.spacing();
    let dp2 = s2.momentum_spacing(scheme.hbar);

    let mut m_q = 0.0;
    let mut m2_q = 0.0;
    let mut m_p = 0.0;
    let mut m2_p = 0.0;
    let mut total = 0.0;
    for k1 in 0..n1 {
        let x = s1.position(k1) / scheme.lambda;
        for c2 in 0..n2 {
            let p = (c2 as f64 - n2 as f64 / 2.0) * dp2 / scheme.mu;
            let w = density[[k1, c2]] * dxi1 * dp2;
            total += w;
            m_q += w * x;
            m2_q += w * x * x;
            m_p += w * p;
            m2_p += w * p * p;
        }
    }
    let var_q_out = m2_q / total - (m_q / total).powi(2);
    let var_p_out = m2_p / total - (m_p / total).powi(2);

    let q_op = HermitianOperator::position(&scheme.object_space);
    let p_op = HermitianOperator::momentum(&scheme.object_space, scheme.hbar);
    let (_, var_q_obj) = moments(&q_op, object_state)?;
    let (_, var_p_obj) = moments(&p_op, object_state)?;
    Ok((var_q_out - var_q_obj, var_p_out - var_p_obj))
}

/// Second moments of both probes, as used by the budget.
#[derive(Debug, Clone, Copy)]
pub struct ProbeMoments {
    pub var_q1: f64,
    pub var_p1: f64,
    pub var_q2: f64,
    pub var_p2: f64,
}

pub fn probe_moments(scheme: &JointScheme) -> Result<ProbeMoments> {
    let s1 = scheme.probe1_state.space(0);
    let s2 = scheme.probe2_state.space(0);
    let (q1, p1) = (
        HermitianOperator::position(s1),
        HermitianOperator::momentum(s1, scheme.hbar),
    );
    let (q2, p2) = (
        HermitianOperator::position(s2),
        HermitianOperator::momentum(s2, scheme.hbar),
    );
    Ok(ProbeMoments {
        var_q1: moments(&q1, &scheme.probe1_state)?.1,
        var_p1: moments(&p1, &scheme.probe1_state)?.1,
        var_q2: moments(&q2, &scheme.probe2_state)?.1,
        var_p2: moments(&p2, &scheme.probe2_state)?.1,
    })
}

/// The inaccuracy budget of a joint scheme.
#[derive(Debug, Clone, Copy)]
pub struct VarianceBudget {
    pub var_e: f64,
    pub var_f: f64,
    /// Probe-intrinsic part: `Var(Q1)Var(P1)/4 + Var(Q2)Var(P2)/4`.
    pub q_term: f64,
    /// Mutual-disturbance part:
    /// `Var(Q1)Var(P2)/(lambda mu)^2 + (lambda mu)^2 Var(Q2)Var(P1)/16`.
    pub d_term: f64,
    /// `16 Var(Q1) Var(P2) / (lambda mu hbar)^2`.
    pub x_ratio: f64,
    pub product: f64,
}

impl VarianceBudget {
    /// `|product - q_term - d_term|` relative to the product.
    pub fn decomposition_residual(&self) -> f64 {
        (self.product - self.q_term - self.d_term).abs() / self.product.abs().max(1e-300)
    }
}

/// Budget from the probe preparations (all moments measured numerically).
pub fn variance_budget(scheme: &JointScheme) -> Result<VarianceBudget> {
    let m = probe_moments(scheme)?;
    let l2 = scheme.lambda * scheme.lambda;
    let u2 = scheme.mu * scheme.mu;
    let var_e = m.var_q1 / l2 + u2 / 4.0 * m.var_q2;
    let var_f = m.var_p2 / u2 + l2 / 4.0 * m.var_p1;
    let q_term = 0.25 * (m.var_q1 * m.var_p1 + m.var_q2 * m.var_p2);
    let d_term = m.var_q1 * m.var_p2 / (l2 * u2) + l2 * u2 / 16.0 * m.var_q2 * m.var_p1;
    let h2 = scheme.hbar.value() * scheme.hbar.value();
    let x_ratio = 16.0 * m.var_q1 * m.var_p2 / (l2 * u2 * h2);
    Ok(VarianceBudget {
        var_e,
        var_f,
        q_term,
        d_term,
        x_ratio,
        product: var_e * var_f,
    })
}

/// Unconditional post-measurement object state `T(phi)`.
pub fn reduced_object_state(
    scheme: &JointScheme,
    object_state: &WaveFunction,
) -> Result<DensityOperator> {
    let evolved = evolve_joint(scheme, object_state)?;
    evolved.partial_trace(0)
}

/// Probability that the outcome lands within `n_sigmas` confidence widths of
/// the phase-space point `(q0, p0)`.
pub fn coverage_probability(
    scheme: &JointScheme,
    object_state: &WaveFunction,
    center: (f64, f64),
    n_sigmas: f64,
) -> Result<f64> {
    let budget = variance_budget(scheme)?;
    let evolved = evolve_joint(scheme, object_state)?;
    let density = pointer_plane_density(scheme, &evolved);
    let s1 = scheme.probe1_state.space(0);
    let s2 = scheme.probe2_state.space(0);
    let l1 = s1.box_length();
    let l2 = s2.momentum_spacing(scheme.hbar) * s2.n_points() as f64;
    let spectral = Spectral2D::new(&density, l1, l2);
    let (q0, p0) = center;
    let half_q = n_sigmas * budget.var_e.sqrt();
    let half_p = n_sigmas * budget.var_f.sqrt();
    let x = Interval::new(q0 - half_q, q0 + half_q).scaled(scheme.lambda);
    let y = Interval::new(p0 - half_p, p0 + half_p).scaled(scheme.mu);
    let r = spectral.rectangles(&[x], &[y]);
    Ok(r[[0, 0]].clamp(0.0, 1.0))
}
