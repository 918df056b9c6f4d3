//! Hermitian operators on a grid factor and their moments.
//!
//! Operators come in three representations: diagonal in position (real
//! samples at the grid points), diagonal in momentum (real samples in FFT
//! bin order, applied through the discrete Fourier transform), and dense
//! matrices in the coefficient convention.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::fourier;
use crate::grid::GridSpace;
use crate::hbar::PlanckConstant;
use crate::linalg;
use crate::state::{DensityOperator, WaveFunction};

/// Threshold below which a small negative variance is treated as roundoff.
pub const VARIANCE_CLIP: f64 = -1e-12;

#[derive(Debug, Clone)]
pub enum OperatorKind {
    /// Multiplication by real samples in position space.
    DiagonalPosition(Array1<f64>),
    /// Multiplication by real samples in momentum space (FFT bin order).
    DiagonalMomentum(Array1<f64>),
    /// Dense Hermitian matrix acting on coefficient vectors.
    Dense(Array2<Complex64>),
}

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    space: GridSpace,
    kind: OperatorKind,
}

impl HermitianOperator {
    pub fn diagonal_position(space: GridSpace, samples: Array1<f64>) -> Result<Self> {
        if samples.len() != space.n_points() {
            return Err(LabError::SpaceMismatch(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                space.n_points()
            )));
        }
        Ok(HermitianOperator {
            space,
            kind: OperatorKind::DiagonalPosition(samples),
        })
    }

    pub fn diagonal_momentum(space: GridSpace, samples_fft_order: Array1<f64>) -> Result<Self> {
        if samples_fft_order.len() != space.n_points() {
            return Err(LabError::SpaceMismatch(format!(
                "{} samples on a {}-point grid",
                samples_fft_order.len(),
                space.n_points()
            )));
        }
        Ok(HermitianOperator {
            space,
            kind: OperatorKind::DiagonalMomentum(samples_fft_order),
        })
    }

    pub fn dense(space: GridSpace, matrix: Array2<Complex64>) -> Result<Self> {
        let n = space.n_points();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(LabError::SpaceMismatch(format!(
                "{}x{} matrix on a {}-point grid",
                matrix.nrows(),
                matrix.ncols(),
                n
            )));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > 1e-10 {
            return Err(LabError::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect:.2e})"
            )));
        }
        Ok(HermitianOperator {
            space,
            kind: OperatorKind::Dense(matrix),
        })
    }

    /// The position operator: multiplication by `x_k`.
    pub fn position(space: &GridSpace) -> Self {
        let samples = Array1::from_iter(space.positions());
        HermitianOperator {
            space: space.clone(),
            kind: OperatorKind::DiagonalPosition(samples),
        }
    }

    /// The momentum operator: multiplication by `p_j` after a Fourier
    /// transform.
    pub fn momentum(space: &GridSpace, hbar: PlanckConstant) -> Self {
        let samples = Array1::from_iter(space.momenta_fft(hbar));
        HermitianOperator {
            space: space.clone(),
            kind: OperatorKind::DiagonalMomentum(samples),
        }
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Apply to raw position-space amplitudes.
    pub fn apply_amplitudes(&self, samples: &[Complex64]) -> Vec<Complex64> {
        match &self.kind {
            OperatorKind::DiagonalPosition(f) => samples
                .iter()
                .zip(f.iter())
                .map(|(z, &v)| z * v)
                .collect(),
            OperatorKind::DiagonalMomentum(f) => {
                let n = self.space.n_points();
                let mut buf = samples.to_vec();
                fourier::plan_forward(n).process(&mut buf);
                for (z, &v) in buf.iter_mut().zip(f.iter()) {
                    *z *= v;
                }
                fourier::plan_inverse(n).process(&mut buf);
                let inv_n = 1.0 / n as f64;
                for z in buf.iter_mut() {
                    *z *= inv_n;
                }
                buf
            }
            OperatorKind::Dense(m) => {
                // The sqrt(dx) factors of the coefficient convention cancel
                // in a linear application.
                let n = samples.len();
                let mut out = vec![Complex64::default(); n];
                for (a, out_a) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for b in 0..n {
                        acc += m[[a, b]] * samples[b];
                    }
                    *out_a = acc;
                }
                out
            }
        }
    }

    /// Dense matrix in the coefficient convention.
    pub fn to_dense(&self) -> Array2<Complex64> {
        let n = self.space.n_points();
        match &self.kind {
            OperatorKind::DiagonalPosition(f) => {
                Array2::from_diag(&Array1::from_iter(f.iter().map(|&v| Complex64::new(v, 0.0))))
            }
            OperatorKind::Dense(m) => m.clone(),
            OperatorKind::DiagonalMomentum(_) => {
                let mut m = Array2::zeros((n, n));
                for b in 0..n {
                    let mut e = vec![Complex64::default(); n];
                    e[b] = Complex64::new(1.0, 0.0);
                    let col = self.apply_amplitudes(&e);
                    for a in 0..n {
                        m[[a, b]] = col[a];
                    }
                }
                m
            }
        }
    }
}

fn inner(space_measure: f64, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * space_measure
}

/// Expectation and variance of `op` in a pure state.
pub fn moments(op: &HermitianOperator, state: &WaveFunction) -> Result<(f64, f64)> {
    if state.n_factors() != 1 || state.space(0) != op.space() {
        return Err(LabError::SpaceMismatch(
            "moments: operator and state live on different grids".into(),
        ));
    }
    let dx = state.space(0).spacing();
    let psi: Vec<Complex64> = state.amplitudes().iter().copied().collect();
    let apsi = op.apply_amplitudes(&psi);
    let mean = inner(dx, &psi, &apsi).re;
    let second = inner(dx, &apsi, &apsi).re;
    let mut var = second - mean * mean;
    if var < 0.0 {
        if var < VARIANCE_CLIP {
            return Err(LabError::InvalidArgument(format!(
                "variance {var:.3e} below the roundoff clip"
            )));
        }
        var = 0.0;
    }
    Ok((mean, var))
}

/// Expectation and variance of `op` in a mixed state.
pub fn moments_mixed(op: &HermitianOperator, rho: &DensityOperator) -> Result<(f64, f64)> {
    if rho.space() != op.space() {
        return Err(LabError::SpaceMismatch(
            "moments: operator and state live on different grids".into(),
        ));
    }
    let m = op.to_dense();
    let r = rho.matrix();
    let n = r.nrows();
    let mr = m.dot(r);
    let mean: f64 = (0..n).map(|k| mr[[k, k]].re).sum();
    let m2r = m.dot(&mr);
    let second: f64 = (0..n).map(|k| m2r[[k, k]].re).sum();
    let mut var = second - mean * mean;
    if var < 0.0 {
        if var < VARIANCE_CLIP {
            return Err(LabError::InvalidArgument(format!(
                "variance {var:.3e} below the roundoff clip"
            )));
        }
        var = 0.0;
    }
    Ok((mean, var))
}

/// The canonical pair `(Q, P)` on a grid.
pub fn canonical_operators(
    space: &GridSpace,
    hbar: PlanckConstant,
) -> (HermitianOperator, HermitianOperator) {
    (
        HermitianOperator::position(space),
        HermitianOperator::momentum(space, hbar),
    )
}

/// Maximum factor size for the dense exponentiation path.
pub const DENSE_FACTOR_LIMIT: usize = 512;

/// `U = exp(-i H t / hbar)` for a dense Hermitian `H`.
pub fn unitary_from_hamiltonian(
    h: &HermitianOperator,
    time: f64,
    hbar: PlanckConstant,
) -> Result<Array2<Complex64>> {
    let n = h.space().n_points();
    if n > DENSE_FACTOR_LIMIT {
        return Err(LabError::SizeGuard {
            n,
            max: DENSE_FACTOR_LIMIT,
            hint: "use the matrix-free conjugate-shift path".into(),
        });
    }
    let m = h.to_dense();
    let gen = m.mapv(|z| z * Complex64::new(0.0, -time / hbar.value()));
    Ok(linalg::expm(&gen))
}
