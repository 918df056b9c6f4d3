//! Fourier machinery on periodic grids.
//!
//! Conventions: with positions `x_k = (k - n/2) dx` and momenta
//! `p_j = (2 pi hbar / L) j` (FFT bin order), the momentum representation is
//!
//! ```text
//! psihat(p_j) = dx / sqrt(2 pi hbar) * sum_k psi(x_k) exp(-i p_j x_k / hbar)
//! ```
//!
//! so `sum_j |psihat_j|^2 dp = sum_k |psi_k|^2 dx`.  Multiplying by a function
//! of `p` and transforming back applies that function of the momentum
//! operator exactly on the grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpace;
use crate::hbar::PlanckConstant;

pub fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

pub fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Unnormalized forward DFT of a short vector.
fn dft_forward(data: &mut [Complex64]) {
    plan_forward(data.len()).process(data);
}

/// Unnormalized inverse DFT of a short vector.
fn dft_inverse(data: &mut [Complex64]) {
    plan_inverse(data.len()).process(data);
}

/// Momentum-representation amplitudes in FFT bin order.
pub fn to_momentum(samples: &[Complex64], space: &GridSpace, hbar: PlanckConstant) -> Vec<Complex64> {
    let n = space.n_points();
    assert_eq!(samples.len(), n);
    let mut buf = samples.to_vec();
    dft_forward(&mut buf);
    let scale = space.spacing() / (2.0 * std::f64::consts::PI * hbar.value()).sqrt();
    for (m, z) in buf.iter_mut().enumerate() {
        // Centered positions contribute the alternating phase (-1)^m.
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *z *= sign * scale;
    }
    buf
}

/// Inverse of [`to_momentum`].
pub fn from_momentum(
    momentum: &[Complex64],
    space: &GridSpace,
    hbar: PlanckConstant,
) -> Vec<Complex64> {
    let n = space.n_points();
    assert_eq!(momentum.len(), n);
    let mut buf = momentum.to_vec();
    for (m, z) in buf.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *z *= sign;
    }
    dft_inverse(&mut buf);
    let scale = (2.0 * std::f64::consts::PI * hbar.value()).sqrt() / space.box_length();
    for z in buf.iter_mut() {
        *z *= scale;
    }
    buf
}

/// Apply a function of the momentum operator: `psi -> f(P) psi`.
pub fn apply_momentum_function<F>(
    samples: &[Complex64],
    space: &GridSpace,
    hbar: PlanckConstant,
    f: F,
) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let n = space.n_points();
    assert_eq!(samples.len(), n);
    let mut buf = samples.to_vec();
    dft_forward(&mut buf);
    for (m, z) in buf.iter_mut().enumerate() {
        *z *= f(space.momentum_fft(m, hbar));
    }
    dft_inverse(&mut buf);
    let inv_n = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= inv_n;
    }
    buf
}

/// Circular index shift: `result[k] = samples[(k - steps) mod n]`, i.e. the
/// sampled function translated by `+steps` grid spacings.
pub fn roll(samples: &[Complex64], steps: i64) -> Vec<Complex64> {
    let n = samples.len() as i64;
    let mut out = vec![Complex64::default(); samples.len()];
    for k in 0..n {
        let src = (k - steps).rem_euclid(n);
        out[k as usize] = samples[src as usize];
    }
    out
}

/// Translate `psi(x) -> psi(x - amount)` on the periodic grid.
///
/// Shifts landing on a grid point (within `1e-9` spacings) are exact index
/// rolls; anything else goes through a spectral phase multiplication.  The
/// phase `p * amount / hbar` is hbar-free because `p` itself carries hbar, so
/// the transform can run at hbar = 1.
pub fn shift(samples: &[Complex64], space: &GridSpace, amount: f64) -> Vec<Complex64> {
    if let Some(steps) = space.index_of(amount, 1e-9) {
        return roll(samples, steps);
    }
    apply_momentum_function(samples, space, PlanckConstant::default(), |p| {
        Complex64::from_polar(1.0, -p * amount)
    })
}

/// Integrates the trigonometric interpolant of periodic samples over
/// arbitrary intervals.
///
/// For smooth, resolved sample sets this is spectrally accurate, which is
/// what lets cell probabilities match continuum values far beyond the
/// `O(dx^2)` of plain Riemann sums.
#[derive(Debug, Clone)]
pub struct CellIntegrator {
    /// Fourier series coefficients `F_j`, index `m` in FFT bin order.
    coeffs: Vec<Complex64>,
    box_length: f64,
    n: usize,
}

impl CellIntegrator {
    /// Build from complex samples on `space`.
    pub fn new(samples: &[Complex64], space: &GridSpace) -> Self {
        let n = space.n_points();
        assert_eq!(samples.len(), n);
        let mut buf = samples.to_vec();
        dft_forward(&mut buf);
        let inv_n = 1.0 / n as f64;
        for (m, z) in buf.iter_mut().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *z *= sign * inv_n;
        }
        CellIntegrator {
            coeffs: buf,
            box_length: space.box_length(),
            n,
        }
    }

    /// Build from a real sampled density.
    pub fn from_density(density: &[f64], space: &GridSpace) -> Self {
        let samples: Vec<Complex64> = density.iter().map(|&d| Complex64::new(d, 0.0)).collect();
        CellIntegrator::new(&samples, space)
    }

    /// Integral of the interpolant over `[a, b)` (periodic extension).
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        let l = self.box_length;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut acc = self.coeffs[0] * (b - a);
        for m in 1..self.n {
            let j = if m < self.n / 2 {
                m as i64
            } else {
                m as i64 - self.n as i64
            };
            let w = two_pi * j as f64 / l;
            let num = Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a);
            acc += self.coeffs[m] * num / Complex64::new(0.0, w);
        }
        acc
    }

    /// Real part of [`Self::integral`], for densities.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.integral(a, b).re
    }
}

/// Discrete circular convolution of two densities sampled on the same
/// centered grid: `c(x_k) = sum_j f(x_j) g(x_k - x_j) dx`.
pub fn convolve_densities(f: &[f64], g: &[f64], space: &GridSpace) -> Vec<f64> {
    let n = space.n_points();
    assert_eq!(f.len(), n);
    assert_eq!(g.len(), n);
    let mut fa: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut ga: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft_forward(&mut fa);
    dft_forward(&mut ga);
    for (a, b) in fa.iter_mut().zip(ga.iter()) {
        *a *= b;
    }
    dft_inverse(&mut fa);
    let scale = space.spacing() / n as f64;
    // Standard circular convolution is indexed from sample 0; the centered
    // grid origin sits at index n/2, so rotate the result accordingly.
    (0..n)
        .map(|k| fa[(k + n / 2) % n].re * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian_samples(space: &GridSpace, center: f64, sigma2: f64) -> Vec<Complex64> {
        space
            .positions()
            .iter()
            .map(|&x| {
                let d = x - center;
                Complex64::new(
                    (2.0 * std::f64::consts::PI * sigma2).powf(-0.25)
                        * (-d * d / (4.0 * sigma2)).exp(),
                    0.0,
                )
            })
            .collect()
    }

    #[test]
    fn momentum_representation_is_unitary() {
        let space = GridSpace::new(128, 30.0).unwrap();
        let hbar = PlanckConstant::default();
        let psi = gaussian_samples(&space, 0.5, 1.3);
        let dx = space.spacing();
        let dp = space.momentum_spacing(hbar);
        let norm_x: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        let phat = to_momentum(&psi, &space, hbar);
        let norm_p: f64 = phat.iter().map(|z| z.norm_sqr()).sum::<f64>() * dp;
        assert_abs_diff_eq!(norm_x, norm_p, epsilon = 1e-12);

        let back = from_momentum(&phat, &space, hbar);
        for (a, b) in psi.iter().zip(back.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_momentum_density_matches_analytic() {
        // |psihat(p)|^2 for a position-space Gaussian of variance s2 is a
        // Gaussian of variance hbar^2/(4 s2).
        let space = GridSpace::new(256, 40.0).unwrap();
        let hbar = PlanckConstant::default();
        let s2 = 0.8;
        let psi = gaussian_samples(&space, 0.0, s2);
        let phat = to_momentum(&psi, &space, hbar);
        let sp2 = 1.0 / (4.0 * s2);
        for m in 0..space.n_points() {
            let p = space.momentum_fft(m, hbar);
            let want = (2.0 * std::f64::consts::PI * sp2).powf(-0.5) * (-p * p / (2.0 * sp2)).exp();
            assert!((phat[m].norm_sqr() - want).abs() < 1e-10, "bin {m}");
        }
    }

    #[test]
    fn spectral_shift_matches_analytic_translation() {
        let space = GridSpace::new(256, 40.0).unwrap();
        let psi = gaussian_samples(&space, 0.0, 1.0);
        let a = 1.2345; // off-grid shift
        let shifted = shift(&psi, &space, a);
        let want = gaussian_samples(&space, a, 1.0);
        for (got, want) in shifted.iter().zip(want.iter()) {
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn roll_shift_is_exact() {
        let space = GridSpace::new(8, 8.0).unwrap();
        let data: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let out = shift(&data, &space, 3.0);
        // psi(x - 3dx): sample k picks source k-3.
        assert_abs_diff_eq!(out[3].re, 0.0);
        assert_abs_diff_eq!(out[0].re, 5.0);
    }

    #[test]
    fn cell_integral_matches_gaussian_tail() {
        let space = GridSpace::new(256, 40.0).unwrap();
        let s2 = 1.0;
        let density: Vec<f64> = space
            .positions()
            .iter()
            .map(|&x| (2.0 * std::f64::consts::PI * s2).powf(-0.5) * (-x * x / (2.0 * s2)).exp())
            .collect();
        let integ = CellIntegrator::from_density(&density, &space);
        for &b in &[0.0, 0.6, 1.37, -2.1] {
            let got = integ.mass(-20.0, b);
            let want = 0.5 * (1.0 + libm::erf(b / (2.0 * s2).sqrt()));
            assert!((got - want).abs() < 1e-12, "boundary {b}: {got} vs {want}");
        }
        assert_abs_diff_eq!(integ.mass(-20.0, 20.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn convolution_of_gaussians_is_gaussian() {
        let space = GridSpace::new(256, 60.0).unwrap();
        let d1: Vec<f64> = space
            .positions()
            .iter()
            .map(|&x| (2.0 * std::f64::consts::PI * 1.0).powf(-0.5) * (-x * x / 2.0).exp())
            .collect();
        let d2: Vec<f64> = space
            .positions()
            .iter()
            .map(|&x| {
                (2.0 * std::f64::consts::PI * 0.5).powf(-0.5) * (-(x - 1.0).powi(2) / 1.0).exp()
            })
            .collect();
        let c = convolve_densities(&d1, &d2, &space);
        // Variances and means add under convolution.
        for (k, &x) in space.positions().iter().enumerate() {
            let want = (2.0 * std::f64::consts::PI * 1.5).powf(-0.5)
                * (-(x - 1.0).powi(2) / 3.0).exp();
            assert!((c[k] - want).abs() < 1e-12);
        }
    }
}
