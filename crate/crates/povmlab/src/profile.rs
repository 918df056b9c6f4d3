//! Analytic wavefunction profiles.
//!
//! Probe preparations are Gaussians or compactly supported bumps.  Keeping
//! the analytic form next to the sampled amplitudes lets scheme evolution
//! evaluate translated copies off-grid exactly and lets pointer-cell masses
//! be computed as true integrals (error functions, or quadrature for the
//! bump) instead of grid Riemann sums.

use num_complex::Complex64;

use crate::hbar::PlanckConstant;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Adaptive Simpson quadrature for complex-valued integrands.
pub fn integrate_complex<F>(f: F, lo: f64, hi: f64, tol: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
        (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    if !(hi > lo) {
        return Complex64::default();
    }
    let m = 0.5 * (lo + hi);
    let fa = f(lo);
    let fm = f(m);
    let fb = f(hi);
    let whole = simpson(lo, hi, fa, fm, fb);
    recurse(&f, lo, hi, fa, fm, fb, whole, tol, 40)
}

/// Real-valued adaptive quadrature.
pub fn integrate_real<F>(f: F, lo: f64, hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), lo, hi, tol).re
}

/// Minimal-uncertainty Gaussian wavepacket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub center: f64,
    pub mean_momentum: f64,
    pub sigma2: f64,
    pub hbar: f64,
}

impl GaussianProfile {
    pub fn eval(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        let amp =
            (2.0 * std::f64::consts::PI * self.sigma2).powf(-0.25) * (-d * d / (4.0 * self.sigma2)).exp();
        Complex64::from_polar(amp, self.mean_momentum * d / self.hbar)
    }

    fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Smooth bump `exp(-1/(1-u^2))`, `u = (x - center)/half_width`, normalized
/// to unit probability on its exact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub center: f64,
    pub half_width: f64,
    norm: f64,
    variance: f64,
    momentum_variance_unit_hbar: f64,
}

impl BumpProfile {
    pub fn new(center: f64, half_width: f64) -> Self {
        assert!(half_width > 0.0, "bump half_width must be positive");
        let w = |t: f64| (-2.0 / (1.0 - t * t)).exp();
        let q = integrate_real(&w, -1.0, 1.0, 1e-15);
        let norm = 1.0 / (q * half_width).sqrt();
        let second = integrate_real(|t| t * t * w(t), -1.0, 1.0, 1e-15);
        let variance = half_width * half_width * second / q;
        // <P^2> = hbar^2 int |psi'|^2 for a real wavefunction.
        let amp = |t: f64| (-1.0 / (1.0 - t * t)).exp();
        let damp = |t: f64| {
            let den = 1.0 - t * t;
            amp(t) * (-2.0 * t / (den * den))
        };
        let dsq = integrate_real(|t| damp(t) * damp(t), -1.0, 1.0, 1e-15);
        let momentum_variance_unit_hbar = dsq / (q * half_width * half_width);
        BumpProfile {
            center,
            half_width,
            norm,
            variance,
            momentum_variance_unit_hbar,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return Complex64::default();
        }
        Complex64::new(self.norm * (-1.0 / (1.0 - u * u)).exp(), 0.0)
    }
}

/// An analytic profile attached to a prepared state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Gaussian(GaussianProfile),
    Bump(BumpProfile),
}

impl Profile {
    pub fn gaussian(center: f64, mean_momentum: f64, sigma2: f64, hbar: PlanckConstant) -> Self {
        assert!(sigma2 > 0.0, "gaussian variance must be positive");
        Profile::Gaussian(GaussianProfile {
            center,
            mean_momentum,
            sigma2,
            hbar: hbar.value(),
        })
    }

    pub fn bump(center: f64, half_width: f64) -> Self {
        Profile::Bump(BumpProfile::new(center, half_width))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Profile::Gaussian(g) => g.eval(x),
            Profile::Bump(b) => b.eval(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.eval(x).norm_sqr()
    }

    pub fn center(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.center,
            Profile::Bump(b) => b.center,
        }
    }

    /// Radius around the center that carries all probability mass up to
    /// below 1e-18 (exact for the bump).
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => 10.0 * g.sigma(),
            Profile::Bump(b) => b.half_width,
        }
    }

    pub fn position_mean(&self) -> f64 {
        self.center()
    }

    pub fn position_variance(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.sigma2,
            Profile::Bump(b) => b.variance,
        }
    }

    pub fn momentum_mean(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.mean_momentum,
            Profile::Bump(_) => 0.0,
        }
    }

    pub fn momentum_variance(&self, hbar: PlanckConstant) -> f64 {
        let h = hbar.value();
        match self {
            Profile::Gaussian(g) => h * h / (4.0 * g.sigma2),
            Profile::Bump(b) => h * h * b.momentum_variance_unit_hbar,
        }
    }

    /// The same profile translated by `delta`.
    pub fn shifted(&self, delta: f64) -> Profile {
        match self {
            Profile::Gaussian(g) => Profile::Gaussian(GaussianProfile {
                center: g.center + delta,
                ..*g
            }),
            Profile::Bump(b) => Profile::Bump(BumpProfile {
                center: b.center + delta,
                ..*b
            }),
        }
    }

    /// Probability mass of `|profile|^2` in `[lo, hi)`.
    pub fn cell_mass(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        match self {
            Profile::Gaussian(g) => {
                let s = g.sigma();
                normal_cdf((hi - g.center) / s) - normal_cdf((lo - g.center) / s)
            }
            Profile::Bump(b) => {
                let a = lo.max(b.center - b.half_width);
                let c = hi.min(b.center + b.half_width);
                if c <= a {
                    return 0.0;
                }
                integrate_real(|x| self.density(x), a, c, 1e-15)
            }
        }
    }

    /// `int_lo^hi conj(bra)(x) ket(x) dx`.
    ///
    /// Same-width Gaussian pairs with equal mean momentum reduce to an error
    /// function; everything else goes through adaptive quadrature over the
    /// joint support.
    pub fn pair_cell_integral(bra: &Profile, ket: &Profile, lo: f64, hi: f64) -> Complex64 {
        if !(hi > lo) {
            return Complex64::default();
        }
        if let (Profile::Gaussian(a), Profile::Gaussian(b)) = (bra, ket) {
            if (a.sigma2 - b.sigma2).abs() <= 1e-14 * a.sigma2
                && (a.mean_momentum - b.mean_momentum).abs() <= 1e-14
                && (a.hbar - b.hbar).abs() <= 1e-14
            {
                let s = a.sigma();
                let mid = 0.5 * (a.center + b.center);
                let delta = a.center - b.center;
                let damp = (-delta * delta / (8.0 * a.sigma2)).exp();
                let window = normal_cdf((hi - mid) / s) - normal_cdf((lo - mid) / s);
                let phase = Complex64::from_polar(1.0, a.mean_momentum * delta / a.hbar);
                return phase * damp * window;
            }
        }
        let a = lo
            .max(bra.center() - bra.support_radius())
            .max(ket.center() - ket.support_radius());
        let b = hi
            .min(bra.center() + bra.support_radius())
            .min(ket.center() + ket.support_radius());
        if b <= a {
            return Complex64::default();
        }
        integrate_complex(|x| bra.eval(x).conj() * ket.eval(x), a, b, 1e-14)
    }

    /// `int conj(bra) ket` over `[lo, hi)` plus its periodic images spaced
    /// by `box_length`.
    ///
    /// On a periodic grid a translated state that leaves the box re-enters
    /// from the other side; summing cell images reproduces that exactly, so
    /// masses over a covering partition always total 1 regardless of where
    /// a branch was shifted.
    pub fn pair_cell_integral_periodic(
        bra: &Profile,
        ket: &Profile,
        lo: f64,
        hi: f64,
        box_length: f64,
    ) -> Complex64 {
        let reach = (bra.center().abs() + bra.support_radius())
            .max(ket.center().abs() + ket.support_radius());
        let images = ((reach + hi.abs().max(lo.abs())) / box_length).ceil() as i64 + 1;
        let mut acc = Complex64::default();
        for w in -images..=images {
            let d = w as f64 * box_length;
            acc += Profile::pair_cell_integral(bra, ket, lo + d, hi + d);
        }
        acc
    }

    /// Probability mass in `[lo, hi)` including periodic images.
    pub fn cell_mass_periodic(&self, lo: f64, hi: f64, box_length: f64) -> f64 {
        Profile::pair_cell_integral_periodic(self, self, lo, hi, box_length).re
    }

    /// Full-line overlap `<bra|ket>`.
    pub fn overlap(bra: &Profile, ket: &Profile) -> Complex64 {
        let lo = (bra.center() - bra.support_radius()).min(ket.center() - ket.support_radius());
        let hi = (bra.center() + bra.support_radius()).max(ket.center() + ket.support_radius());
        Profile::pair_cell_integral(bra, ket, lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_masses_are_error_functions() {
        let p = Profile::gaussian(0.5, 0.0, 2.0, PlanckConstant::default());
        assert_abs_diff_eq!(p.cell_mass(-100.0, 100.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.cell_mass(-100.0, 0.5), 0.5, epsilon = 1e-14);
        let s = 2.0_f64.sqrt();
        let want = normal_cdf((1.5 - 0.5) / s);
        assert_abs_diff_eq!(p.cell_mass(-100.0, 1.5), want, epsilon = 1e-14);
    }

    #[test]
    fn bump_is_normalized_and_compact() {
        let p = Profile::bump(0.0, 0.25);
        assert_abs_diff_eq!(p.cell_mass(-0.25, 0.25), 1.0, epsilon = 1e-12);
        assert_eq!(p.eval(0.3), Complex64::default());
        assert_eq!(p.eval(-0.25), Complex64::default());
        assert!(p.eval(0.0).re > 0.0);
        // Quadrature mass agrees with the exact support restriction.
        assert_abs_diff_eq!(p.cell_mass(-1.0, 1.0), 1.0, epsilon = 1e-12);
        assert!(p.position_variance() > 0.0 && p.position_variance() < 0.25 * 0.25);
    }

    #[test]
    fn gaussian_pair_integral_fast_path_matches_quadrature() {
        let a = Profile::gaussian(-1.0, 0.0, 0.7, PlanckConstant::default());
        let b = Profile::gaussian(0.4, 0.0, 0.7, PlanckConstant::default());
        let fast = Profile::pair_cell_integral(&a, &b, -0.5, 2.0);
        let slow = integrate_complex(|x| a.eval(x).conj() * b.eval(x), -12.0, 12.0, 1e-14);
        let slow_window = integrate_complex(|x| a.eval(x).conj() * b.eval(x), -0.5, 2.0, 1e-14);
        assert!((fast - slow_window).norm() < 1e-12);
        // The full-line overlap obeys exp(-d^2/(8 s^2)).
        let full = Profile::overlap(&a, &b);
        let want = (-(1.4_f64).powi(2) / (8.0 * 0.7)).exp();
        assert!((full.re - want).abs() < 1e-12);
        assert!((slow.re - want).abs() < 1e-12);
    }

    #[test]
    fn gaussian_momentum_phase_enters_pair_integrals() {
        let hbar = PlanckConstant::default();
        let a = Profile::gaussian(0.0, 0.0, 1.0, hbar);
        let b = Profile::gaussian(0.0, 0.8, 1.0, hbar);
        let got = Profile::overlap(&a, &b);
        // <g_0 | g_p> = exp(-p^2 sigma^2 / (2 hbar^2)) up to phase convention.
        assert_abs_diff_eq!(got.norm(), (-0.8_f64 * 0.8 * 1.0 / 2.0).exp(), epsilon = 1e-10);
    }

    #[test]
    fn disjoint_bumps_have_zero_overlap() {
        let a = Profile::bump(-1.0, 0.25);
        let b = Profile::bump(1.0, 0.25);
        assert_eq!(Profile::overlap(&a, &b), Complex64::default());
        assert_eq!(Profile::pair_cell_integral(&a, &b, -5.0, 5.0), Complex64::default());
    }

    #[test]
    fn shifted_profile_translates_mass() {
        let p = Profile::gaussian(0.0, 0.0, 1.0, PlanckConstant::default());
        let q = p.shifted(2.5);
        assert_abs_diff_eq!(
            p.cell_mass(-1.0, 1.0),
            q.cell_mass(1.5, 3.5),
            epsilon = 1e-14
        );
    }
}
