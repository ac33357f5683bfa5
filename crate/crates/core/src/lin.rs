//! Dense factorization kernels used by the tensor-train sweeps.
//!
//! Unfoldings encountered during TT-SVD and rounding are extremely
//! rectangular (a handful of rows against 2^k columns), so both the SVD and
//! the LQ wrappers reduce the long side with a Householder QR first and only
//! run the iterative part on the small square factor.
//!
//! The square SVD itself is a one-sided Jacobi iteration. nalgebra's
//! bidiagonal SVD mis-factors some nearly rank-deficient complex matrices
//! (duplicated-row layouts coming out of butterfly cores reproduced it), so
//! the crate carries its own kernel; Jacobi is slower per element but exact
//! to machine precision and the inputs here are always small.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) type CMat = DMatrix<Complex64>;

/// Economy SVD returning `(u, sigma, v_adj)` with `sigma` sorted descending.
pub(crate) fn svd_econ(mat: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = mat.shape();
    if rows < cols {
        let (u2, s, vt2) = svd_econ(&mat.adjoint());
        return (vt2.adjoint(), s, u2.adjoint());
    }
    if rows > cols {
        let qr = mat.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let (u_small, s, vt) = jacobi_svd_square(&r);
        (q * u_small, s, vt)
    } else {
        jacobi_svd_square(mat)
    }
}

/// One-sided Jacobi SVD for square (or tall) matrices: rotate column pairs
/// until all are mutually orthogonal, then read off `σ` as column norms.
fn jacobi_svd_square(mat: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (m, n) = mat.shape();
    debug_assert!(m >= n);
    let mut u = mat.clone();
    let mut v = CMat::identity(n, n);

    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let (up, uq) = (u[(i, p)], u[(i, q)]);
                    app += up.norm_sqr();
                    aqq += uq.norm_sqr();
                    apq += up.conj() * uq;
                }
                let denom = (app * aqq).sqrt();
                if denom == 0.0 {
                    continue;
                }
                let ratio = apq.norm() / denom;
                off = off.max(ratio);
                if ratio <= 1e-16 {
                    continue;
                }
                // fold out the phase so the 2x2 Gram block is real symmetric
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)] * phase.conj();
                    u[(i, p)] = up * cs - uq * sn;
                    u[(i, q)] = (up * sn + uq * cs) * phase;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)] * phase.conj();
                    v[(i, p)] = vp * cs - vq * sn;
                    v[(i, q)] = (vp * sn + vq * cs) * phase;
                }
            }
        }
        if off <= 1e-15 {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u_out = CMat::zeros(m, n);
    let mut vt_out = CMat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (idx, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..m {
                u_out[(i, idx)] = u[(i, j)] / s;
            }
        }
        for i in 0..n {
            vt_out[(idx, i)] = v[(i, j)].conj();
        }
    }
    (u_out, sigma, vt_out)
}

/// LQ factorization `mat = l * q` with row-orthonormal `q`.
pub(crate) fn lq(mat: &CMat) -> (CMat, CMat) {
    let qr = mat.adjoint().qr();
    (qr.r().adjoint(), qr.q().adjoint())
}

pub(crate) fn hcat(a: &CMat, b: &CMat) -> CMat {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut m = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

pub(crate) fn vcat(a: &CMat, b: &CMat) -> CMat {
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

pub(crate) fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

/// Smallest kept rank so the discarded Frobenius tail is at most `tau`.
///
/// `sigma` must be sorted descending. `tau == 0` drops exact zeros only.
pub(crate) fn truncation_rank(sigma: &[f64], tau: f64) -> usize {
    if sigma.is_empty() {
        return 1;
    }
    let mut tail = 0.0;
    let mut rank = sigma.len();
    for (i, &s) in sigma.iter().enumerate().rev() {
        let t = tail + s * s;
        if t.sqrt() <= tau || (tau == 0.0 && s == 0.0) {
            tail = t;
            rank = i;
        } else {
            break;
        }
    }
    rank.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check_svd(mat: &CMat, tol: f64) {
        let (u, s, vt) = svd_econ(mat);
        let k = s.len();
        let mut rebuilt = CMat::zeros(mat.nrows(), mat.ncols());
        for t in 0..k {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    rebuilt[(i, j)] += u[(i, t)] * c(s[t], 0.0) * vt[(t, j)];
                }
            }
        }
        let err = (&rebuilt - mat).norm() / mat.norm().max(1e-300);
        assert!(err < tol, "reconstruction error {err}");
        assert!(s.windows(2).all(|w| w[0] >= w[1]), "unsorted {s:?}");
        // orthonormal factors on the nonzero part
        let gram_u = u.adjoint() * &u;
        let gram_v = &vt * vt.adjoint();
        for i in 0..k {
            if s[i] == 0.0 {
                continue;
            }
            assert!((gram_u[(i, i)].re - 1.0).abs() < 1e-12);
            assert!((gram_v[(i, i)].re - 1.0).abs() < 1e-12);
            for j in 0..k {
                if i != j && s[j] > 0.0 {
                    assert!(gram_u[(i, j)].norm() < 1e-12);
                    assert!(gram_v[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_reconstructs_wide_matrix() {
        let mat = CMat::from_fn(3, 40, |i, j| c((i + 1) as f64 / (j + 2) as f64, j as f64 * 0.01));
        check_svd(&mat, 1e-12);
    }

    #[test]
    fn svd_reconstructs_tall_and_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tall = CMat::from_fn(23, 7, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        check_svd(&tall, 1e-12);
        let square = CMat::from_fn(9, 9, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        check_svd(&square, 1e-12);
    }

    #[test]
    fn svd_handles_duplicated_rows() {
        // nearly rank-deficient layout that broke the library SVD
        let base = [
            c(0.5527198894267629, 2.1e-16),
            c(-0.08367032826557073, -6.3e-16),
            c(1.2494518880451084, 2.3e-16),
            c(0.03701323358645192, -3.3e-18),
        ];
        let mat = CMat::from_fn(4, 2, |i, j| base[2 * (i % 2) + j]);
        check_svd(&mat, 1e-13);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let mat = CMat::zeros(5, 3);
        let (_, s, _) = svd_econ(&mat);
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn svd_rank_one() {
        let mat = CMat::from_fn(6, 6, |i, j| c((i + 1) as f64, 0.0) * c(0.3 * j as f64 - 1.0, 0.2));
        let (_, s, _) = svd_econ(&mat);
        assert!(s[0] > 1e-10);
        assert!(s[1] <= 1e-12 * s[0], "{s:?}");
    }

    #[test]
    fn lq_gives_orthonormal_rows() {
        let mat = CMat::from_fn(4, 17, |i, j| c((i * j) as f64 * 0.1 - 1.0, (i + j) as f64 * 0.05));
        let (l, q) = lq(&mat);
        let rebuilt = &l * &q;
        assert!((&mat - &rebuilt).norm() < 1e-12 * mat.norm().max(1.0));
        let gram = &q * q.adjoint();
        let eye = CMat::identity(gram.nrows(), gram.ncols());
        assert!((gram - eye).norm() < 1e-12);
    }

    #[test]
    fn truncation_rank_respects_tail() {
        let sigma = [4.0, 2.0, 1e-6, 1e-9];
        assert_eq!(truncation_rank(&sigma, 1e-3), 2);
        assert_eq!(truncation_rank(&sigma, 0.0), 4);
        assert_eq!(truncation_rank(&sigma, 10.0), 1);
    }
}
