//! Discrete convolution: dense reference paths and QTT algorithms.
//!
//! The causal convolution `c(j) = Σ_{k≤j} a(j−k)·b(k)` is multiplication by
//! the lower-triangular Toeplitz matrix generated by `a`. Two compressed
//! backends are provided:
//!
//! * `Kazeev` assembles the QTT operator of that matrix digit-by-digit. A
//!   borrow bit rides along the rank index while the digits of `j − k` are
//!   produced from the low end, which doubles the operand rank and nothing
//!   more, so the product representation has ranks exactly `2·r_a·r_b`
//!   before truncation. The fat representation is reduced by a seeded
//!   randomized interface sketch (oversampled well past the observed
//!   convolution ranks) followed by a deterministic SVD rounding at the
//!   requested tolerance.
//! * `Fourier` zero-pads both operands to twice the length, runs the QTT
//!   Fourier transform, multiplies pointwise and transforms back, then keeps
//!   the leading block.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fourier::{fft_dense, qtt_fft, Direction};
use crate::lin::CMat;
use crate::shift::{interleave_concat, leading_block};
use crate::train::{self, Core};
use crate::tt::{TTVector, Tolerance};

/// Convolution backend selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMethod {
    Kazeev,
    Fourier,
}

/// Seed for the interface sketch; fixed so every run is reproducible.
const SKETCH_SEED: u64 = 0x7a3c_5eed;

/// General Toeplitz times vector through circulant embedding and three FFTs.
///
/// `first_col` holds `T[j,0]`, `first_row_tail` holds `T[0,1..]`.
pub fn toeplitz_matvec_dense(
    first_col: &[f64],
    first_row_tail: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    let m = first_col.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if first_row_tail.len() != m - 1 || x.len() != m {
        return Err(Error::InvalidParameter(format!(
            "toeplitz shapes disagree: col {m}, row tail {}, x {}",
            first_row_tail.len(),
            x.len()
        )));
    }
    let n = (2 * m).next_power_of_two();
    let mut gen = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in first_col.iter().enumerate() {
        gen[j] = Complex64::new(v, 0.0);
    }
    for (q, &v) in first_row_tail.iter().enumerate() {
        gen[n - 1 - q] = Complex64::new(v, 0.0);
    }
    let mut xs = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in x.iter().enumerate() {
        xs[j] = Complex64::new(v, 0.0);
    }
    let fg = fft_dense(&gen, Direction::Forward)?;
    let fx = fft_dense(&xs, Direction::Forward)?;
    let prod: Vec<Complex64> = fg.iter().zip(&fx).map(|(a, b)| a * b).collect();
    let full = fft_dense(&prod, Direction::Inverse)?;
    let scale = (n as f64).sqrt();
    Ok(full[..m].iter().map(|z| z.re * scale).collect())
}

/// Causal (lower-triangular Toeplitz) convolution truncated to `a.len()`.
pub fn causal_conv_dense(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let tail = vec![0.0; a.len().saturating_sub(1)];
    toeplitz_matvec_dense(a, &tail, b)
}

#[derive(Clone, Debug, Default)]
pub struct ConvTelemetry {
    /// bond dimensions of the operator-times-vector representation before
    /// any truncation (Kazeev method only)
    pub pre_round_ranks: Vec<usize>,
    pub max_rank: usize,
}

/// Causal convolution of two QTT vectors of equal length.
pub fn qtt_convolve(
    a: &TTVector,
    b: &TTVector,
    tol: &Tolerance,
    method: ConvMethod,
) -> Result<TTVector> {
    qtt_convolve_with_telemetry(a, b, tol, method).map(|(v, _)| v)
}

pub fn qtt_convolve_with_telemetry(
    a: &TTVector,
    b: &TTVector,
    tol: &Tolerance,
    method: ConvMethod,
) -> Result<(TTVector, ConvTelemetry)> {
    if a.mode_count() != b.mode_count() {
        return Err(Error::ModeMismatch(a.mode_count(), b.mode_count()));
    }
    match method {
        ConvMethod::Kazeev => convolve_kazeev(a, b, tol),
        ConvMethod::Fourier => convolve_fourier(a, b, tol),
    }
}

fn convolve_fourier(
    a: &TTVector,
    b: &TTVector,
    tol: &Tolerance,
) -> Result<(TTVector, ConvTelemetry)> {
    let d = a.mode_count();
    let zeros = TTVector::zeros(d)?;
    let pad_a = interleave_concat(a, &zeros)?;
    let pad_b = interleave_concat(b, &zeros)?;
    let mut work = Tolerance::new(tol.rel_eps() / 5.0)?;
    if let Some(cap) = tol.max_rank() {
        work = work.with_max_rank(cap)?;
    }
    let fa = qtt_fft(&pad_a, Direction::Forward, &work)?;
    let fb = qtt_fft(&pad_b, Direction::Forward, &work)?;
    let prod = fa.hadamard(&fb)?.round(&work)?;
    let full = qtt_fft(&prod, Direction::Inverse, &work)?;
    let scale = ((1u64 << (d + 1)) as f64).sqrt();
    let c = leading_block(&full.scale(Complex64::new(scale, 0.0)), d)?;
    let c = c.round(tol)?;
    let telemetry = ConvTelemetry {
        pre_round_ranks: Vec::new(),
        max_rank: c.max_rank(),
    };
    Ok((c, telemetry))
}

fn convolve_kazeev(
    a: &TTVector,
    b: &TTVector,
    tol: &Tolerance,
) -> Result<(TTVector, ConvTelemetry)> {
    let product = toeplitz_apply_cores(a.cores(), b.cores());
    let pre_round_ranks = train::ranks(&product);

    let r_a = a.max_rank();
    let r_b = b.max_rank();
    let fat = *pre_round_ranks.iter().max().unwrap_or(&1);
    let sketch = fat.min((2 * (r_a + r_b) + 16).max(48));
    let mut cores = sketch_compress(product, sketch);

    let stats = train::round_in_place(&mut cores, tol.rel_eps(), tol.max_rank());
    if stats.capped {
        return Err(Error::RankExplosion {
            stage: cores.len(),
            rank: stats.max_rank,
            cap: tol.max_rank().unwrap_or(0),
        });
    }
    let telemetry = ConvTelemetry {
        pre_round_ranks,
        max_rank: stats.max_rank,
    };
    Ok((TTVector::from_cores(cores), telemetry))
}

/// Cores of `T(a)·b` where `T(a)` is the lower-triangular Toeplitz operator
/// generated by `a`. The operator core at digit `p` tracks the borrow bit of
/// `j − k`; contracting it against `b`'s core gives bond dimensions
/// `2·r_a·r_p` exactly (borrow branch dropped at the borders).
fn toeplitz_apply_cores(a: &[Core], b: &[Core]) -> Vec<Core> {
    let d = a.len();
    let mut out = Vec::with_capacity(d);
    for p in 0..d {
        let (ca, cb) = (&a[p], &b[p]);
        let (ra_l, ra_r) = (ca.left_rank(), ca.right_rank());
        let (rb_l, rb_r) = (cb.left_rank(), cb.right_rank());
        let beta_in_span = if p == 0 { 1 } else { 2 };
        let beta_out_span = if p == d - 1 { 1 } else { 2 };
        let rows = beta_in_span * ra_l * rb_l;
        let cols = beta_out_span * ra_r * rb_r;
        let mut slices = [CMat::zeros(rows, cols), CMat::zeros(rows, cols)];
        for (j, slice) in slices.iter_mut().enumerate() {
            for k in 0..2usize {
                for beta_in in 0..beta_in_span {
                    let t = j as i32 - k as i32 - beta_in as i32;
                    let (digit, beta_out) = if t >= 0 { (t as usize, 0) } else { ((t + 2) as usize, 1) };
                    if beta_out >= beta_out_span {
                        continue;
                    }
                    let block = ca.slices[digit].kronecker(&cb.slices[k]);
                    let (r0, c0) = (beta_in * ra_l * rb_l, beta_out * ra_r * rb_r);
                    for i in 0..block.nrows() {
                        for jj in 0..block.ncols() {
                            slice[(r0 + i, c0 + jj)] += block[(i, jj)];
                        }
                    }
                }
            }
        }
        out.push(Core::new(slices[0].clone(), slices[1].clone()));
    }
    out
}

/// Compress a fat chain to at most `target` bond dimensions using a seeded
/// random interface sketch. With `target` at least the true rank the result
/// spans the exact range; otherwise it is a quasi-optimal randomized basis.
/// Callers always follow with a deterministic SVD rounding.
fn sketch_compress(cores: Vec<Core>, target: usize) -> Vec<Core> {
    let d = cores.len();
    let needs_work = cores
        .iter()
        .any(|c| c.left_rank() > target || c.right_rank() > target);
    if d == 1 || !needs_work {
        return cores;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SKETCH_SEED);
    let mut gauss = |rows: usize, cols: usize| -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    };

    // right-to-left interface sketches S_p = E_p · Ω_pᵀ
    let one = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    let mut sketches: Vec<CMat> = vec![CMat::zeros(0, 0); d];
    let mut carry = one.clone();
    for p in (1..d).rev() {
        let core = &cores[p];
        let ell_right = carry.ncols();
        let ell_left = target;
        let mut s = CMat::zeros(core.left_rank(), ell_left);
        for bit in 0..2 {
            let omega = gauss(ell_left, ell_right);
            s += &core.slices[bit] * &carry * omega.adjoint();
        }
        sketches[p - 1] = s.clone();
        carry = s;
    }

    // left-to-right projection onto orthonormal bases of the sketches
    let mut out = Vec::with_capacity(d);
    let mut t = one;
    for p in 0..d {
        let z0 = &t * &cores[p].slices[0];
        let z1 = &t * &cores[p].slices[1];
        if p == d - 1 {
            out.push(Core::new(z0, z1));
            break;
        }
        let y = crate::lin::vcat(&z0, &z1);
        let candidate = &y * &sketches[p];
        let q = candidate.qr().q();
        out.push(Core::from_unfold_left(&q));
        t = q.adjoint() * y;
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct ReciprocalReport {
    pub iterations: usize,
    /// RMS residual `‖λ∘x − 1‖/√n` after each iteration
    pub residuals: Vec<f64>,
    pub max_rank: usize,
}

/// Elementwise reciprocal by Newton iteration
/// `x ← x ∘ (2·1 − λ ∘ x)` with rounding after every product.
///
/// The initial guess is `conj(λ)/M` where `M` bounds `max|λ|²` from above:
/// exactly `Σ|λ|²/n` when the modulus is flat, otherwise the norm bound
/// `‖u^{∘8}‖₂^{1/8}` on `u = λ∘conj(λ)` (within a factor `n^{1/16}` of the
/// true maximum), mirroring the `(‖A‖₁‖A‖_∞)^{-1}` scaling rule for Newton
/// inverse iterations.
pub fn qtt_reciprocal(
    lambda: &TTVector,
    tol: &Tolerance,
    max_iters: usize,
) -> Result<TTVector> {
    qtt_reciprocal_with_report(lambda, tol, max_iters).map(|(v, _)| v)
}

pub fn qtt_reciprocal_with_report(
    lambda: &TTVector,
    tol: &Tolerance,
    max_iters: usize,
) -> Result<(TTVector, ReciprocalReport)> {
    let d = lambda.mode_count();
    let n = (1u64 << d) as f64;

    // contract check on small instances: refuse spectra that dip below the
    // floor instead of producing garbage
    if d <= 12 {
        let dense = lambda.materialize()?;
        let max_mag = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let floor = 1e3 * f64::EPSILON * max_mag;
        if let Some(bad) = dense.iter().find(|z| z.norm() < floor) {
            return Err(Error::ReciprocalFloor {
                value: bad.norm(),
                floor,
            });
        }
    }

    let est_tol = Tolerance::new(1e-8)?;
    let ones = TTVector::ones(d)?;
    let u = lambda.hadamard(&lambda.conj())?.round(&est_tol)?;
    let s1 = ones.dot(&u)?.re;
    let s2 = u.dot(&u)?.re;
    let mean = s1 / n;
    let flat = (s2 * n - s1 * s1).abs() <= 1e-10 * s1 * s1;
    let m_bound = if flat {
        mean
    } else {
        // three Hadamard squarings of u/mean, then the 8th-root norm bound
        let mut v = u.scale(Complex64::new(1.0 / mean, 0.0));
        for _ in 0..3 {
            v = v.hadamard(&v)?.round(&est_tol)?;
        }
        mean * v.norm().powf(1.0 / 8.0) * (1.0 + 1e-6)
    };
    if !(m_bound.is_finite() && m_bound > 0.0) {
        return Err(Error::Singular("spectrum magnitude estimate failed".into()));
    }

    let one = Complex64::new(1.0, 0.0);
    let mut x = lambda.conj().scale(Complex64::new(1.0 / m_bound, 0.0));
    let mut report = ReciprocalReport::default();
    for iter in 1..=max_iters {
        let y = lambda.hadamard(&x)?.round(tol)?;
        let residual = y.add(&ones.scale(-one))?.norm() / n.sqrt();
        report.iterations = iter;
        report.residuals.push(residual);
        report.max_rank = report.max_rank.max(x.max_rank()).max(y.max_rank());
        if residual <= tol.rel_eps().max(1e-14) {
            return Ok((x, report));
        }
        let correction = ones.scale(Complex64::new(2.0, 0.0)).add(&y.scale(-one))?;
        x = x.hadamard(&correction)?.round(tol)?;
    }
    Err(Error::ReciprocalNoConvergence {
        iters: max_iters,
        residual: report.residuals.last().copied().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn direct_toeplitz(col: &[f64], row_tail: &[f64], x: &[f64]) -> Vec<f64> {
        let m = col.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .map(|k| {
                        let t = j as i64 - k as i64;
                        let coeff = if t >= 0 {
                            col[t as usize]
                        } else {
                            row_tail[(-t - 1) as usize]
                        };
                        coeff * x[k]
                    })
                    .sum()
            })
            .collect()
    }

    fn direct_causal(a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..a.len())
            .map(|j| (0..=j).map(|k| a[j - k] * b[k]).sum())
            .collect()
    }

    fn max_rel(got: &[f64], want: &[f64]) -> f64 {
        let scale = want.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        got.iter()
            .zip(want)
            .map(|(g, w)| (g - w).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn toeplitz_identity() {
        let mut col = vec![0.0; 8];
        col[0] = 1.0;
        let x: Vec<f64> = (0..8).map(|i| i as f64 - 3.0).collect();
        let y = toeplitz_matvec_dense(&col, &vec![0.0; 7], &x).unwrap();
        assert!(max_rel(&y, &x) < 1e-13);
    }

    #[test]
    fn toeplitz_bidiagonal_prefix() {
        let mut col = vec![0.0; 8];
        col[0] = 1.0;
        col[1] = 1.0;
        let y = toeplitz_matvec_dense(&col, &vec![0.0; 7], &vec![1.0; 8]).unwrap();
        let want = [1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0];
        assert!(max_rel(&y, &want) < 1e-13);
    }

    #[test]
    fn toeplitz_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        use rand::Rng;
        let m = 512;
        let col: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
        let row_tail: Vec<f64> = (0..m - 1).map(|_| rng.random::<f64>() - 0.5).collect();
        let x: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
        let fast = toeplitz_matvec_dense(&col, &row_tail, &x).unwrap();
        let slow = direct_toeplitz(&col, &row_tail, &x);
        assert!(max_rel(&fast, &slow) <= 1e-11);
    }

    #[test]
    fn conv_identity_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b = TTVector::random_real(8, 3, &mut rng);
        let e0 = TTVector::unit(8).unwrap();
        let tol = Tolerance::new(1e-12).unwrap();
        for method in [ConvMethod::Kazeev, ConvMethod::Fourier] {
            let c = qtt_convolve(&e0, &b, &tol, method).unwrap();
            let got = c.materialize_real().unwrap();
            let want = b.materialize_real().unwrap();
            assert!(max_rel(&got, &want) < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn conv_of_ones_counts_prefix() {
        let d = 6;
        let ones = TTVector::ones(d).unwrap();
        let tol = Tolerance::new(1e-12).unwrap();
        let want: Vec<f64> = (1..=(1 << d)).map(|j| j as f64).collect();
        for method in [ConvMethod::Kazeev, ConvMethod::Fourier] {
            let c = qtt_convolve(&ones, &ones, &tol, method).unwrap();
            assert!(max_rel(&c.materialize_real().unwrap(), &want) < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn conv_matches_dense_oracle_and_rank_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let tol = Tolerance::new(1e-10).unwrap();
        for _ in 0..5 {
            let a = TTVector::random_real(10, 3, &mut rng);
            let b = TTVector::random_real(10, 3, &mut rng);
            let want = direct_causal(
                &a.materialize_real().unwrap(),
                &b.materialize_real().unwrap(),
            );
            let (ck, telemetry) =
                qtt_convolve_with_telemetry(&a, &b, &tol, ConvMethod::Kazeev).unwrap();
            assert!(max_rel(&ck.materialize_real().unwrap(), &want) <= 1e-8);
            let ra = a.ranks();
            let rb = b.ranks();
            for (p, r) in telemetry.pre_round_ranks.iter().enumerate() {
                assert!(
                    *r <= 2 * ra[p] * rb[p],
                    "bond {p}: {} > 2·{}·{}",
                    r,
                    ra[p],
                    rb[p]
                );
            }
            let cf = qtt_convolve(&a, &b, &tol, ConvMethod::Fourier).unwrap();
            assert!(max_rel(&cf.materialize_real().unwrap(), &want) <= 1e-8);
        }
    }

    #[test]
    fn conv_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = TTVector::random_real(9, 3, &mut rng);
        let b = TTVector::random_real(9, 3, &mut rng);
        let tol = Tolerance::new(1e-11).unwrap();
        let ab = qtt_convolve(&a, &b, &tol, ConvMethod::Kazeev).unwrap();
        let ba = qtt_convolve(&b, &a, &tol, ConvMethod::Kazeev).unwrap();
        let da = ab.materialize_real().unwrap();
        let db = ba.materialize_real().unwrap();
        assert!(max_rel(&da, &db) <= 1e-9);
    }

    #[test]
    fn conv_is_linear_in_first_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a1 = TTVector::random_real(8, 3, &mut rng);
        let a2 = TTVector::random_real(8, 3, &mut rng);
        let b = TTVector::random_real(8, 3, &mut rng);
        let tol = Tolerance::new(1e-11).unwrap();
        let (alpha, beta) = (2.5, -0.75);
        let lhs = qtt_convolve(
            &a1.scale(Complex64::new(alpha, 0.0))
                .add(&a2.scale(Complex64::new(beta, 0.0)))
                .unwrap(),
            &b,
            &tol,
            ConvMethod::Kazeev,
        )
        .unwrap();
        let c1 = qtt_convolve(&a1, &b, &tol, ConvMethod::Kazeev).unwrap();
        let c2 = qtt_convolve(&a2, &b, &tol, ConvMethod::Kazeev).unwrap();
        let rhs = c1
            .scale(Complex64::new(alpha, 0.0))
            .add(&c2.scale(Complex64::new(beta, 0.0)))
            .unwrap();
        assert!(max_rel(
            &lhs.materialize_real().unwrap(),
            &rhs.materialize_real().unwrap()
        ) <= 1e-9);
    }

    #[test]
    fn reciprocal_of_ones_converges_immediately() {
        let ones = TTVector::ones(8).unwrap();
        let tol = Tolerance::new(1e-12).unwrap();
        let (x, report) = qtt_reciprocal_with_report(&ones, &tol, 30).unwrap();
        assert_eq!(report.iterations, 1);
        let dense = x.materialize_real().unwrap();
        assert!(dense.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn reciprocal_of_constant_two() {
        let twos = TTVector::constant(7, Complex64::new(2.0, 0.0)).unwrap();
        let tol = Tolerance::new(1e-12).unwrap();
        let x = qtt_reciprocal(&twos, &tol, 30).unwrap();
        let dense = x.materialize_real().unwrap();
        assert!(dense.iter().all(|v| (v - 0.5).abs() < 1e-11));
    }

    #[test]
    fn reciprocal_matches_dense_and_converges_quadratically() {
        // smooth strictly-positive spectrum
        let d = 10;
        let n = 1usize << d;
        let dense: Vec<f64> = (0..n)
            .map(|k| 2.0 + (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let lambda = TTVector::quantize_real(&dense, &Tolerance::new(1e-12).unwrap()).unwrap();
        let tol = Tolerance::new(1e-11).unwrap();
        let (x, report) = qtt_reciprocal_with_report(&lambda, &tol, 60).unwrap();
        let got = x.materialize_real().unwrap();
        let want: Vec<f64> = dense.iter().map(|v| 1.0 / v).collect();
        assert!(max_rel(&got, &want) <= 1e-9);

        // residual roughly squares until it hits the rounding floor
        let r = &report.residuals;
        assert!(r.len() >= 3);
        for w in r.windows(2) {
            if w[0] < 0.5 && w[1] > 1e-12 {
                assert!(
                    w[1] <= 10.0 * w[0] * w[0] + 1e-12,
                    "residuals not quadratic: {:?}",
                    r
                );
            }
        }
    }

    #[test]
    fn reciprocal_refuses_tiny_entries() {
        let mut dense = vec![1.0; 64];
        dense[10] = 1e-17;
        let lambda = TTVector::quantize_real(&dense, &Tolerance::new(1e-15).unwrap()).unwrap();
        let tol = Tolerance::new(1e-10).unwrap();
        assert!(matches!(
            qtt_reciprocal(&lambda, &tol, 30),
            Err(Error::ReciprocalFloor { .. })
        ));
    }
}
