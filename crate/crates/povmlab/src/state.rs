//! States on one grid or on tensor products of grids.
//!
//! `WaveFunction` amplitudes follow the continuum normalization
//! `sum_k |psi_k|^2 dx = 1` (products of spacings for composite systems), so
//! continuum formulas transcribe literally.  Density operators absorb the
//! grid measure into their matrix: they act on coefficient vectors
//! `c_k = psi_k sqrt(dx)` and have plain unit trace, which keeps operator
//! invariants (spectra, completeness) grid-independent.

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::fourier;
use crate::grid::GridSpace;
use crate::hbar::PlanckConstant;
use crate::linalg;
use crate::profile::Profile;

/// Fraction of the box (per side) regarded as the boundary region.
pub const BOUNDARY_FRACTION: f64 = 0.05;
/// Probability mass allowed in the boundary region.
pub const BOUNDARY_MASS_BOUND: f64 = 1e-10;

/// A pure state on one grid or a product of grids.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    spaces: Vec<GridSpace>,
    amplitudes: ArrayD<Complex64>,
    profile: Option<Profile>,
}

impl WaveFunction {
    /// Wrap raw samples on a single grid.  The input must already be close
    /// to normalized (within 1e-6); the stored amplitudes are renormalized
    /// exactly.
    pub fn from_samples(space: GridSpace, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != space.n_points() {
            return Err(LabError::SpaceMismatch(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                space.n_points()
            )));
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&[samples.len()]), samples).unwrap();
        let mut wf = WaveFunction {
            spaces: vec![space],
            amplitudes: arr,
            profile: None,
        };
        let n = wf.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(LabError::InvalidArgument(format!(
                "samples have norm {n}, expected 1"
            )));
        }
        wf.renormalize();
        Ok(wf)
    }

    /// Internal constructor for already-normalized data.
    pub(crate) fn from_parts(
        spaces: Vec<GridSpace>,
        amplitudes: ArrayD<Complex64>,
        profile: Option<Profile>,
    ) -> Self {
        WaveFunction {
            spaces,
            amplitudes,
            profile,
        }
    }

    /// Wrap raw amplitudes on a product of grids.  Shape must match the
    /// grids and the norm must already be 1 within 1e-6; the stored
    /// amplitudes are renormalized exactly.
    pub fn from_composite_samples(
        spaces: Vec<GridSpace>,
        amplitudes: ArrayD<Complex64>,
    ) -> Result<Self> {
        if spaces.is_empty() {
            return Err(LabError::InvalidArgument("need at least one factor".into()));
        }
        let dims: Vec<usize> = spaces.iter().map(|s| s.n_points()).collect();
        if amplitudes.shape() != dims.as_slice() {
            return Err(LabError::SpaceMismatch(format!(
                "amplitude shape {:?} does not match grid dims {:?}",
                amplitudes.shape(),
                dims
            )));
        }
        let mut wf = WaveFunction {
            spaces,
            amplitudes,
            profile: None,
        };
        let n = wf.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(LabError::InvalidArgument(format!(
                "samples have norm {n}, expected 1"
            )));
        }
        wf.renormalize();
        Ok(wf)
    }

    /// Minimal-uncertainty Gaussian state.
    ///
    /// Guards: the 6-sigma ball around `center` must fit in half the box,
    /// and both the position and momentum boundary regions must carry less
    /// than [`BOUNDARY_MASS_BOUND`] probability.
    pub fn gaussian(
        space: &GridSpace,
        center: f64,
        mean_momentum: f64,
        position_variance: f64,
        hbar: PlanckConstant,
    ) -> Result<Self> {
        if !(position_variance > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "position_variance = {position_variance} must be positive"
            )));
        }
        let sigma = position_variance.sqrt();
        let half = space.box_length() / 2.0;
        if 6.0 * sigma >= half - center.abs() {
            return Err(LabError::Localization {
                what: format!("gaussian(center={center}, sigma={sigma:.4})"),
                mass: 1.0,
                bound: BOUNDARY_MASS_BOUND,
            });
        }
        let profile = Profile::gaussian(center, mean_momentum, position_variance, hbar);
        let edge = (1.0 - 2.0 * BOUNDARY_FRACTION) * half;
        let mass_outside = 1.0 - profile.cell_mass(-edge, edge);
        if mass_outside > BOUNDARY_MASS_BOUND {
            return Err(LabError::Localization {
                what: format!("gaussian(center={center}, sigma={sigma:.4})"),
                mass: mass_outside,
                bound: BOUNDARY_MASS_BOUND,
            });
        }
        // Same guard on the momentum side: the wavepacket must be resolved.
        let sigma_p = hbar.value() / (2.0 * sigma);
        let p_edge = (1.0 - 2.0 * BOUNDARY_FRACTION) * space.momentum_cutoff(hbar);
        let z = (p_edge - mean_momentum.abs()) / sigma_p;
        let p_mass = 2.0 * crate::profile::normal_cdf(-z);
        if p_mass > BOUNDARY_MASS_BOUND {
            return Err(LabError::Localization {
                what: format!("gaussian momentum spread sigma_p={sigma_p:.4}"),
                mass: p_mass,
                bound: BOUNDARY_MASS_BOUND,
            });
        }
        let samples: Vec<Complex64> = space.positions().iter().map(|&x| profile.eval(x)).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&[samples.len()]), samples).unwrap();
        let mut wf = WaveFunction {
            spaces: vec![space.clone()],
            amplitudes: arr,
            profile: Some(profile),
        };
        wf.renormalize();
        Ok(wf)
    }

    /// Compactly supported bump state on `(center - half_width, center + half_width)`.
    pub fn bump(space: &GridSpace, center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "half_width = {half_width} must be positive"
            )));
        }
        let half = space.box_length() / 2.0;
        if center.abs() + half_width >= (1.0 - 2.0 * BOUNDARY_FRACTION) * half {
            return Err(LabError::Localization {
                what: format!("bump(center={center}, half_width={half_width})"),
                mass: 1.0,
                bound: BOUNDARY_MASS_BOUND,
            });
        }
        if half_width < space.spacing() {
            return Err(LabError::InvalidArgument(format!(
                "bump half_width {half_width} below one grid spacing {}",
                space.spacing()
            )));
        }
        let profile = Profile::bump(center, half_width);
        let samples: Vec<Complex64> = space.positions().iter().map(|&x| profile.eval(x)).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&[samples.len()]), samples).unwrap();
        let mut wf = WaveFunction {
            spaces: vec![space.clone()],
            amplitudes: arr,
            profile: Some(profile),
        };
        wf.renormalize();
        Ok(wf)
    }

    /// Tensor product of single- or multi-factor states.
    pub fn tensor(parts: &[&WaveFunction]) -> WaveFunction {
        assert!(!parts.is_empty(), "tensor of zero factors");
        let mut spaces = Vec::new();
        let mut dims = Vec::new();
        for p in parts {
            spaces.extend(p.spaces.iter().cloned());
            dims.extend(p.amplitudes.shape().iter().copied());
        }
        let mut data = vec![Complex64::new(1.0, 0.0)];
        for p in parts {
            let cur = p.amplitudes.as_slice().expect("standard layout");
            let mut next = Vec::with_capacity(data.len() * cur.len());
            for &a in &data {
                for &b in cur {
                    next.push(a * b);
                }
            }
            data = next;
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&dims), data).unwrap();
        WaveFunction {
            spaces,
            amplitudes: arr,
            profile: None,
        }
    }

    pub fn n_factors(&self) -> usize {
        self.spaces.len()
    }

    pub fn space(&self, factor: usize) -> &GridSpace {
        &self.spaces[factor]
    }

    pub fn spaces(&self) -> &[GridSpace] {
        &self.spaces
    }

    pub fn amplitudes(&self) -> &ArrayD<Complex64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut ArrayD<Complex64> {
        self.profile = None;
        &mut self.amplitudes
    }

    /// Analytic preparation profile, when the state was built from one.
    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_ref()
    }

    /// Product of grid spacings: the integration measure.
    pub fn measure(&self) -> f64 {
        self.spaces.iter().map(|s| s.spacing()).product()
    }

    /// `sqrt(sum |psi|^2 measure)`.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        (s * self.measure()).sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        let inv = Complex64::new(1.0 / n, 0.0);
        self.amplitudes.mapv_inplace(|z| z * inv);
    }

    /// Marginal position density along one factor (spacing measure).
    pub fn position_density(&self, factor: usize) -> Vec<f64> {
        let n = self.spaces[factor].n_points();
        let mut out = vec![0.0; n];
        let shape = self.amplitudes.shape().to_vec();
        let post: usize = shape[factor + 1..].iter().product();
        let data = self.amplitudes.as_slice().expect("standard layout");
        let stride = n * post;
        for (idx, z) in data.iter().enumerate() {
            let k = (idx % stride) / post;
            out[k] += z.norm_sqr();
        }
        let w = self.measure() / self.spaces[factor].spacing();
        for v in out.iter_mut() {
            *v *= w;
        }
        out
    }

    /// Single-factor momentum density on the FFT-ordered momentum grid.
    pub fn momentum_density(&self, hbar: PlanckConstant) -> Vec<f64> {
        assert_eq!(self.n_factors(), 1, "momentum_density is single-factor");
        let samples = self.amplitudes.as_slice().unwrap();
        fourier::to_momentum(samples, &self.spaces[0], hbar)
            .iter()
            .map(|z| z.norm_sqr())
            .collect()
    }

    /// Probability mass in the outer [`BOUNDARY_FRACTION`] of the box on
    /// each side, along `factor`.
    pub fn boundary_mass(&self, factor: usize) -> f64 {
        let space = &self.spaces[factor];
        let density = self.position_density(factor);
        let edge = (0.5 - BOUNDARY_FRACTION) * space.box_length();
        let dx = space.spacing();
        density
            .iter()
            .enumerate()
            .filter(|(k, _)| space.position(*k).abs() >= edge)
            .map(|(_, d)| d * dx)
            .sum()
    }

    /// Raise a localization error if any factor holds boundary mass above
    /// the guard.
    pub fn check_localized(&self, context: &str) -> Result<()> {
        for f in 0..self.n_factors() {
            let mass = self.boundary_mass(f);
            if mass > BOUNDARY_MASS_BOUND {
                return Err(LabError::Localization {
                    what: format!("{context} (factor {f})"),
                    mass,
                    bound: BOUNDARY_MASS_BOUND,
                });
            }
        }
        Ok(())
    }

    /// Phase-space displacement `(dq, dp)`: an exact index roll in position
    /// and an exact plane-wave phase in momentum.  Both displacements must
    /// lie on their grids.
    pub fn displaced(&self, dq: f64, dp: f64, hbar: PlanckConstant) -> Result<WaveFunction> {
        assert_eq!(self.n_factors(), 1, "displaced is single-factor");
        let space = &self.spaces[0];
        let steps = space.index_of(dq, 1e-9).ok_or_else(|| {
            LabError::Alignment(format!(
                "position displacement {dq} is not a multiple of dx = {}",
                space.spacing()
            ))
        })?;
        let dp_steps = dp / space.momentum_spacing(hbar);
        if (dp_steps - dp_steps.round()).abs() > 1e-9 {
            return Err(LabError::Alignment(format!(
                "momentum displacement {dp} is not a multiple of dp = {}",
                space.momentum_spacing(hbar)
            )));
        }
        let samples = self.amplitudes.as_slice().unwrap();
        let rolled = fourier::roll(samples, steps);
        let shifted: Vec<Complex64> = rolled
            .iter()
            .enumerate()
            .map(|(k, z)| z * Complex64::from_polar(1.0, dp * space.position(k) / hbar.value()))
            .collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&[shifted.len()]), shifted).unwrap();
        let profile = match self.profile {
            Some(Profile::Gaussian(g)) => Some(Profile::Gaussian(crate::profile::GaussianProfile {
                center: g.center + dq,
                mean_momentum: g.mean_momentum + dp,
                ..g
            })),
            // A boosted bump is no longer real-valued; drop the analytic form.
            Some(p @ Profile::Bump(_)) if dp == 0.0 => Some(p.shifted(dq)),
            _ => None,
        };
        Ok(WaveFunction {
            spaces: self.spaces.clone(),
            amplitudes: arr,
            profile,
        })
    }

    /// Partial trace over all factors except `keep`.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityOperator> {
        if self.n_factors() < 2 {
            return Err(LabError::InvalidArgument(
                "partial_trace needs a composite state".into(),
            ));
        }
        if keep >= self.n_factors() {
            return Err(LabError::InvalidArgument(format!(
                "subsystem index {keep} out of range for {} factors",
                self.n_factors()
            )));
        }
        let shape = self.amplitudes.shape().to_vec();
        let nk = shape[keep];
        let pre: usize = shape[..keep].iter().product();
        let post: usize = shape[keep + 1..].iter().product();
        let data = self.amplitudes.as_slice().expect("standard layout");
        let mut rho = Array2::<Complex64>::zeros((nk, nk));
        for ipre in 0..pre {
            for a in 0..nk {
                let base_a = (ipre * nk + a) * post;
                for b in 0..nk {
                    let base_b = (ipre * nk + b) * post;
                    let mut acc = Complex64::default();
                    for ipost in 0..post {
                        acc += data[base_a + ipost] * data[base_b + ipost].conj();
                    }
                    rho[[a, b]] += acc;
                }
            }
        }
        let w = Complex64::new(self.measure(), 0.0);
        rho.mapv_inplace(|z| z * w);
        DensityOperator::new(self.spaces[keep].clone(), rho)
    }

    /// Coefficient vector `c_k = psi_k sqrt(measure)` (single factor).
    pub fn coefficients(&self) -> Array1<Complex64> {
        assert_eq!(self.n_factors(), 1, "coefficients is single-factor");
        let s = Complex64::new(self.measure().sqrt(), 0.0);
        Array1::from_iter(self.amplitudes.iter().map(|&z| z * s))
    }
}

/// Tensor product of a list of states (the spec-level operation).
pub fn tensor_state(parts: &[WaveFunction]) -> WaveFunction {
    let refs: Vec<&WaveFunction> = parts.iter().collect();
    WaveFunction::tensor(&refs)
}

/// A mixed state on a single grid, stored in the coefficient convention
/// (plain unit trace).
#[derive(Debug, Clone)]
pub struct DensityOperator {
    space: GridSpace,
    matrix: Array2<Complex64>,
}

impl DensityOperator {
    /// Wrap a matrix, checking Hermiticity and unit trace.  The positivity
    /// check is the expensive part and lives in [`Self::validate`].
    pub fn new(space: GridSpace, matrix: Array2<Complex64>) -> Result<Self> {
        let n = space.n_points();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(LabError::SpaceMismatch(format!(
                "{}x{} matrix on a {}-point grid",
                matrix.nrows(),
                matrix.ncols(),
                n
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > 1e-10 {
            return Err(LabError::InvalidArgument(format!(
                "density matrix is not Hermitian (defect {herm:.2e})"
            )));
        }
        let tr: Complex64 = (0..n).map(|k| matrix[[k, k]]).sum();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-10 {
            return Err(LabError::InvalidArgument(format!(
                "density matrix has trace {tr}, expected 1"
            )));
        }
        Ok(DensityOperator { space, matrix })
    }

    pub fn from_pure(psi: &WaveFunction) -> DensityOperator {
        let c = psi.coefficients();
        let n = c.len();
        let mut m = Array2::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                m[[a, b]] = c[a] * c[b].conj();
            }
        }
        DensityOperator {
            space: psi.space(0).clone(),
            matrix: m,
        }
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows())
            .map(|k| self.matrix[[k, k]].re)
            .sum()
    }

    /// `tr(rho^2)`, 1 for pure states.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.matrix.nrows() {
            for b in 0..self.matrix.ncols() {
                acc += (self.matrix[[a, b]] * self.matrix[[b, a]]).re;
            }
        }
        acc
    }

    /// `<psi| rho |psi>` for a pure reference state on the same grid.
    pub fn fidelity_pure(&self, psi: &WaveFunction) -> f64 {
        let c = psi.coefficients();
        let mut acc = Complex64::default();
        for a in 0..c.len() {
            for b in 0..c.len() {
                acc += c[a].conj() * self.matrix[[a, b]] * c[b];
            }
        }
        acc.re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).values
    }

    /// Full invariant check: Hermitian within 1e-10, eigenvalues >= -1e-9,
    /// unit trace within 1e-9.
    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.matrix);
        if herm > 1e-10 {
            return Err(LabError::InvalidArgument(format!(
                "hermiticity defect {herm:.2e}"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(LabError::InvalidArgument(format!("trace {tr} != 1")));
        }
        let min = self
            .eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -1e-9 {
            return Err(LabError::InvalidArgument(format!(
                "negative eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hbar() -> PlanckConstant {
        PlanckConstant::default()
    }

    #[test]
    fn gaussian_state_is_normalized_and_localized() {
        let space = GridSpace::new(256, 40.0).unwrap();
        let wf = WaveFunction::gaussian(&space, 0.0, 0.0, 1.0, hbar()).unwrap();
        assert_abs_diff_eq!(wf.norm(), 1.0, epsilon = 1e-12);
        assert!(wf.boundary_mass(0) < 1e-10);
        wf.check_localized("test").unwrap();
    }

    #[test]
    fn gaussian_state_guards() {
        let space = GridSpace::new(256, 40.0).unwrap();
        // 6 sigma exceeds the available half box.
        assert!(matches!(
            WaveFunction::gaussian(&space, 0.0, 0.0, 16.0, hbar()),
            Err(LabError::Localization { .. })
        ));
        // Off-center state pushed into the wall.
        assert!(matches!(
            WaveFunction::gaussian(&space, 18.0, 0.0, 1.0, hbar()),
            Err(LabError::Localization { .. })
        ));
        // Too narrow for the momentum grid.
        assert!(matches!(
            WaveFunction::gaussian(&space, 0.0, 0.0, 1e-4, hbar()),
            Err(LabError::Localization { .. })
        ));
    }

    #[test]
    fn tensor_norm_is_multiplicative() {
        let s1 = GridSpace::new(32, 16.0).unwrap();
        let s2 = GridSpace::new(32, 12.0).unwrap();
        let a = WaveFunction::gaussian(&s1, 0.0, 0.0, 0.5, hbar()).unwrap();
        let b = WaveFunction::gaussian(&s2, 0.0, 0.0, 0.4, hbar()).unwrap();
        let t = WaveFunction::tensor(&[&a, &b]);
        assert_eq!(t.n_factors(), 2);
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-9);
        // Product amplitudes.
        let idx = [5usize, 7usize];
        let want = a.amplitudes()[[5]] * b.amplitudes()[[7]];
        assert!((t.amplitudes()[IxDyn(&idx)] - want).norm() < 1e-14);
    }

    #[test]
    fn three_factor_tensor() {
        let s = GridSpace::new(32, 16.0).unwrap();
        let a = WaveFunction::gaussian(&s, 0.0, 0.0, 0.5, hbar()).unwrap();
        let t = WaveFunction::tensor(&[&a, &a, &a]);
        assert_eq!(t.amplitudes().len(), 32 * 32 * 32);
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn partial_trace_of_product_state_is_pure() {
        let s1 = GridSpace::new(24, 12.0).unwrap();
        let s2 = GridSpace::new(32, 16.0).unwrap();
        let a = WaveFunction::gaussian(&s1, 0.5, 0.0, 0.4, hbar()).unwrap();
        let b = WaveFunction::gaussian(&s2, -0.5, 0.0, 0.6, hbar()).unwrap();
        let t = WaveFunction::tensor(&[&a, &b]);

        let rho_b = t.partial_trace(1).unwrap();
        assert_abs_diff_eq!(rho_b.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_b.purity(), 1.0, epsilon = 1e-10);
        let eigs = rho_b.eigenvalues();
        assert_abs_diff_eq!(eigs[eigs.len() - 1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rho_b.fidelity_pure(&b), 1.0, epsilon = 1e-10);
        rho_b.validate().unwrap();
    }

    #[test]
    fn partial_trace_of_entangled_pair_is_mixed() {
        // Maximally entangled state on two 4-point grids: sum_k |k>|k> / 2.
        let s = GridSpace::new(4, 4.0).unwrap();
        let mut data = vec![Complex64::default(); 16];
        for k in 0..4 {
            data[k * 4 + k] = Complex64::new(0.5, 0.0); // norm: 4 * 0.25 * dx^2 = 1
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&[4, 4]), data).unwrap();
        let t = WaveFunction::from_parts(vec![s.clone(), s.clone()], arr, None);
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-12);
        for keep in 0..2 {
            let rho = t.partial_trace(keep).unwrap();
            assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rho.purity(), 0.25, epsilon = 1e-12);
            for ev in rho.eigenvalues() {
                assert_abs_diff_eq!(ev, 0.25, epsilon = 1e-12);
            }
        }
        assert!(t.partial_trace(2).is_err());
    }

    #[test]
    fn displacement_is_exact_on_grid() {
        let space = GridSpace::new(128, 32.0).unwrap();
        let wf = WaveFunction::gaussian(&space, 0.0, 0.0, 1.0, hbar()).unwrap();
        let dq = 4.0 * space.spacing();
        let dp = 3.0 * space.momentum_spacing(hbar());
        let moved = wf.displaced(dq, dp, hbar()).unwrap();
        assert_abs_diff_eq!(moved.norm(), 1.0, epsilon = 1e-12);
        let d = moved.position_density(0);
        let d0 = wf.position_density(0);
        assert_abs_diff_eq!(d[64 + 4], d0[64], epsilon = 1e-12);
        assert!(wf.displaced(0.3 * space.spacing(), 0.0, hbar()).is_err());
        assert!(wf.displaced(0.0, 0.3, hbar()).is_err());
    }
}
