//! Dense complex linear algebra for small operator matrices.
//!
//! Two workhorses live here: a cyclic Jacobi eigensolver for Hermitian
//! matrices (robust, high relative accuracy, fine for the n <= 512 dense
//! guard) and a scaling-and-squaring Pade(13) matrix exponential following
//! Higham's method.  Everything operates on `ndarray::Array2<Complex64>`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Max absolute entry of `a`.
pub fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max absolute entry of `a - b`.
pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff: dimension mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Complex identity matrix.
pub fn identity(n: usize) -> Array2<Complex64> {
    Array2::from_diag(&Array1::from_elem(n, Complex64::new(1.0, 0.0)))
}

/// Deviation of `a` from Hermiticity in max-norm.
pub fn hermiticity_defect(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Matrix 1-norm (max column sum of absolute values).
fn one_norm(a: &Array2<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Eigendecomposition `a = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, ordered like
    /// `values`.
    pub vectors: Array2<Complex64>,
}

/// Cyclic Jacobi eigensolver for Hermitian `a`.
///
/// Panics if `a` is not square; the caller is responsible for Hermiticity
/// (the routine only reads the upper triangle and mirrors it).
pub fn eigh(a: &Array2<Complex64>) -> HermitianEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh requires a square matrix");
    let mut m = a.clone();
    // Mirror the upper triangle so roundoff asymmetry cannot accumulate.
    for i in 0..n {
        m[[i, i]] = Complex64::new(m[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            m[[j, i]] = m[[i, j]].conj();
        }
    }
    let mut v = identity(n);
    let scale = max_abs(&m).max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m[[p, q]];
                let babs = beta.norm();
                if babs <= tol * 1e-2 {
                    continue;
                }
                let phase = beta / babs; // e^{i phi}
                let tau = (m[[q, q]].re - m[[p, p]].re) / (2.0 * babs);
                // Smaller-magnitude root of 1 - t^2 + 2 tau t = 0.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column update: col_p <- c col_p + s e^{-i phi} col_q,
                //                col_q <- -s e^{i phi} col_p + c col_q,
                // then the same on rows via Hermiticity.
                let sp = Complex64::new(s, 0.0) * phase.conj();
                let sq = Complex64::new(s, 0.0) * phase;
                for i in 0..n {
                    let aip = m[[i, p]];
                    let aiq = m[[i, q]];
                    m[[i, p]] = aip * c + aiq * sp;
                    m[[i, q]] = aiq * c - aip * sq;
                }
                for j in 0..n {
                    let apj = m[[p, j]];
                    let aqj = m[[q, j]];
                    m[[p, j]] = apj * c + aqj * sq;
                    m[[q, j]] = aqj * c - apj * sp;
                }
                m[[p, q]] = Complex64::new(0.0, 0.0);
                m[[q, p]] = Complex64::new(0.0, 0.0);
                m[[p, p]] = Complex64::new(m[[p, p]].re, 0.0);
                m[[q, q]] = Complex64::new(m[[q, q]].re, 0.0);
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c + viq * sp;
                    v[[i, q]] = viq * c - vip * sq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, dst]] = v[[i, src]];
        }
    }
    HermitianEigen { values, vectors }
}

/// Solve `A X = B` by LU decomposition with partial pivoting, in place of
/// copies.  Panics on dimension mismatch or an exactly singular pivot.
pub fn lu_solve(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lu_solve requires a square matrix");
    assert_eq!(n, b.nrows(), "lu_solve: rhs row mismatch");
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.ncols();

    for k in 0..n {
        let mut piv = k;
        let mut best = lu[[k, k]].norm();
        for i in (k + 1)..n {
            let m = lu[[i, k]].norm();
            if m > best {
                best = m;
                piv = i;
            }
        }
        assert!(best > 0.0, "lu_solve: singular matrix");
        if piv != k {
            for j in 0..n {
                lu.swap([k, j], [piv, j]);
            }
            for j in 0..nrhs {
                x.swap([k, j], [piv, j]);
            }
        }
        let pivot = lu[[k, k]];
        for i in (k + 1)..n {
            let f = lu[[i, k]] / pivot;
            lu[[i, k]] = f;
            for j in (k + 1)..n {
                let v = lu[[k, j]];
                lu[[i, j]] -= f * v;
            }
            for j in 0..nrhs {
                let v = x[[k, j]];
                x[[i, j]] -= f * v;
            }
        }
    }
    // Back substitution.
    for j in 0..nrhs {
        for i in (0..n).rev() {
            let mut s = x[[i, j]];
            for k in (i + 1)..n {
                s -= lu[[i, k]] * x[[k, j]];
            }
            x[[i, j]] = s / lu[[i, i]];
        }
    }
    x
}

// Pade(13) numerator coefficients (Higham 2005, Table 10.4).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential via scaling-and-squaring with a Pade(13) approximant.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new((0.5f64).powi(s as i32), 0.0);
    let m = a.mapv(|z| z * scale);

    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let eye = identity(n);
    let m2 = m.dot(&m);
    let m4 = m2.dot(&m2);
    let m6 = m2.dot(&m4);

    let u_inner = &m6.mapv(|z| z * c(13)) + &m4.mapv(|z| z * c(11)) + &m2.mapv(|z| z * c(9));
    let u_poly = m6.dot(&u_inner)
        + &m6.mapv(|z| z * c(7))
        + &m4.mapv(|z| z * c(5))
        + &m2.mapv(|z| z * c(3))
        + &eye.mapv(|z| z * c(1));
    let u = m.dot(&u_poly);

    let v_inner = &m6.mapv(|z| z * c(12)) + &m4.mapv(|z| z * c(10)) + &m2.mapv(|z| z * c(8));
    let v = m6.dot(&v_inner)
        + &m6.mapv(|z| z * c(6))
        + &m4.mapv(|z| z * c(4))
        + &m2.mapv(|z| z * c(2))
        + &eye.mapv(|z| z * c(0));

    let mut r = lu_solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[[i, i]] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[[i, j]] = z;
                a[[j, i]] = z.conj();
            }
        }
        a
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        for seed in 0..4 {
            let a = random_hermitian(12, seed);
            let e = eigh(&a);
            let d = Array2::from_diag(&Array1::from_iter(
                e.values.iter().map(|&x| Complex64::new(x, 0.0)),
            ));
            let back = e.vectors.dot(&d).dot(&dagger(&e.vectors));
            assert!(max_abs_diff(&a, &back) < 1e-12);
            let vtv = dagger(&e.vectors).dot(&e.vectors);
            assert!(max_abs_diff(&vtv, &identity(12)) < 1e-12);
        }
    }

    #[test]
    fn eigh_diagonal_matrix() {
        let mut a = Array2::zeros((4, 4));
        for (i, &d) in [3.0, -1.0, 2.0, 0.5].iter().enumerate() {
            a[[i, i]] = Complex64::new(d, 0.0);
        }
        let e = eigh(&a);
        assert_eq!(e.values.len(), 4);
        for (v, want) in e.values.iter().zip([-1.0, 0.5, 2.0, 3.0]) {
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_solves_linear_systems() {
        let a = random_hermitian(9, 7) + &identity(9).mapv(|z| z * Complex64::new(5.0, 0.0));
        let b = random_hermitian(9, 8);
        let x = lu_solve(&a, &b);
        assert!(max_abs_diff(&a.dot(&x), &b) < 1e-11);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z: Array2<Complex64> = Array2::zeros((5, 5));
        assert!(max_abs_diff(&expm(&z), &identity(5)) < 1e-15);
    }

    #[test]
    fn expm_matches_eigendecomposition_for_skew_hermitian() {
        // exp(-i H t) computed by Pade must agree with the spectral formula.
        for seed in 0..4 {
            let h = random_hermitian(8, 100 + seed);
            let t = 0.7;
            let gen = h.mapv(|z| z * Complex64::new(0.0, -t));
            let u = expm(&gen);

            let e = eigh(&h);
            let phases = Array2::from_diag(&Array1::from_iter(
                e.values.iter().map(|&x| Complex64::from_polar(1.0, -x * t)),
            ));
            let want = e.vectors.dot(&phases).dot(&dagger(&e.vectors));
            assert!(max_abs_diff(&u, &want) < 1e-12);

            let unitarity = max_abs_diff(&dagger(&u).dot(&u), &identity(8));
            assert!(unitarity < 1e-13);
        }
    }
}
