//! Exact structural operations on QTT vectors.
//!
//! Single-element shifts are built literally from the closed-form core
//! patterns: shifting enlarges every internal rank by at most one and leaves
//! values exact, so none of these operations round. Callers decide when to
//! re-compress.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lin::{block_diag, hcat, vcat, CMat};
use crate::train::Core;
use crate::TTVector;

fn scalar(z: Complex64) -> CMat {
    CMat::from_element(1, 1, z)
}

/// Right shift by one: `[x, a(0), …, a(2^d−2)]`.
///
/// Core pattern for digit p keeps the shifted content in the top-left block
/// and routes the "all lower digits were ones" carry through an extra rank
/// carrying the prefix products `A₁⁽¹⁾…A₁⁽ᵠ⁻¹⁾A₀⁽ᵠ⁾`.
pub fn push(a: &TTVector, x: Complex64) -> TTVector {
    let cores = a.cores();
    let d = cores.len();
    if d == 1 {
        return TTVector::from_cores(vec![Core::new(
            scalar(x),
            cores[0].slices[0].clone(),
        )]);
    }

    let mut out = Vec::with_capacity(d);
    // digit 1: [0 1] selects the carry row, [A0 0] emits the shifted content
    let r1 = cores[0].right_rank();
    out.push(Core::new(
        hcat(&CMat::zeros(1, r1), &scalar(Complex64::new(1.0, 0.0))),
        hcat(&cores[0].slices[0], &CMat::zeros(1, 1)),
    ));

    // prefix = A₁⁽¹⁾…A₁⁽ᵖ⁻¹⁾ ahead of the current core
    let mut prefix = cores[0].slices[1].clone();
    for (p, core) in cores.iter().enumerate().skip(1) {
        let carry = &prefix * &core.slices[0]; // 1 × r_p
        if p == d - 1 {
            out.push(Core::new(
                vcat(&core.slices[0], &scalar(x)),
                vcat(&core.slices[1], &carry),
            ));
        } else {
            let r = core.right_rank();
            out.push(Core::new(
                block_diag(&core.slices[0], &scalar(Complex64::new(1.0, 0.0))),
                vcat(
                    &hcat(&core.slices[1], &CMat::zeros(core.left_rank(), 1)),
                    &hcat(&carry, &CMat::zeros(1, 1)),
                ),
            ));
            prefix = &prefix * &core.slices[1];
        }
    }
    TTVector::from_cores(out)
}

/// Left shift by one: `[a(1), …, a(2^d−1), y]`.
pub fn pull(a: &TTVector, y: Complex64) -> TTVector {
    let cores = a.cores();
    let d = cores.len();
    if d == 1 {
        return TTVector::from_cores(vec![Core::new(
            cores[0].slices[1].clone(),
            scalar(y),
        )]);
    }

    let mut out = Vec::with_capacity(d);
    let r1 = cores[0].right_rank();
    out.push(Core::new(
        hcat(&cores[0].slices[1], &CMat::zeros(1, 1)),
        hcat(&CMat::zeros(1, r1), &scalar(Complex64::new(1.0, 0.0))),
    ));

    let mut prefix = cores[0].slices[0].clone();
    for (p, core) in cores.iter().enumerate().skip(1) {
        let carry = &prefix * &core.slices[1]; // 1 × r_p
        if p == d - 1 {
            out.push(Core::new(
                vcat(&core.slices[0], &carry),
                vcat(&core.slices[1], &scalar(y)),
            ));
        } else {
            out.push(Core::new(
                vcat(
                    &hcat(&core.slices[0], &CMat::zeros(core.left_rank(), 1)),
                    &hcat(&carry, &CMat::zeros(1, 1)),
                ),
                block_diag(&core.slices[1], &scalar(Complex64::new(1.0, 0.0))),
            ));
            prefix = &prefix * &core.slices[0];
        }
    }
    TTVector::from_cores(out)
}

/// `result(k) = a(2^d − 1 − k)`: flip every digit by swapping core slices.
pub fn reverse(a: &TTVector) -> TTVector {
    let cores = a
        .cores()
        .iter()
        .map(|c| Core::new(c.slices[1].clone(), c.slices[0].clone()))
        .collect();
    TTVector::from_cores(cores)
}

/// First `2^t` entries as a `t`-digit vector: the fixed high-digit tail
/// `A₀⁽ᵗ⁺¹⁾…A₀⁽ᵈ⁾` collapses into core `t`.
pub fn leading_block(a: &TTVector, t: usize) -> Result<TTVector> {
    let d = a.mode_count();
    if t < 1 || t > d {
        return Err(Error::IndexOutOfRange(format!(
            "leading_block needs 1 ≤ t ≤ {d}, got {t}"
        )));
    }
    if t == d {
        return Ok(a.clone());
    }
    let cores = a.cores();
    let mut tail = cores[t].slices[0].clone();
    for core in &cores[t + 1..] {
        tail = &tail * &core.slices[0];
    }
    absorb_tail(cores, t, &tail)
}

/// Entries `a(2^t)…a(2^{t+1}−1)` (first column of the lower-left block) as a
/// `t`-digit vector via the tail `A₁⁽ᵗ⁺¹⁾A₀⁽ᵗ⁺²⁾…A₀⁽ᵈ⁾`.
pub fn block_column(a: &TTVector, t: usize) -> Result<TTVector> {
    let d = a.mode_count();
    if t < 1 || t >= d {
        return Err(Error::IndexOutOfRange(format!(
            "block_column needs 1 ≤ t ≤ {}, got {t}",
            d - 1
        )));
    }
    let cores = a.cores();
    let mut tail = cores[t].slices[1].clone();
    for core in &cores[t + 1..] {
        tail = &tail * &core.slices[0];
    }
    absorb_tail(cores, t, &tail)
}

fn absorb_tail(cores: &[Core], t: usize, tail: &CMat) -> Result<TTVector> {
    let mut out: Vec<Core> = cores[..t].to_vec();
    let last = &mut out[t - 1];
    last.slices[0] = &last.slices[0] * tail;
    last.slices[1] = &last.slices[1] * tail;
    Ok(TTVector::from_cores(out))
}

/// `[a(2^t), a(2^t−1), …, a(1)]` (first row of the lower-left block):
/// pull, take the leading block, then revert the element order.
pub fn block_row(a: &TTVector, t: usize) -> Result<TTVector> {
    block_row_with_fill(a, t, Complex64::new(0.0, 0.0))
}

/// The fill value enters the pulled tail slot only, which the leading block
/// never reads for `t ≤ d−1`; exposed so tests can prove that.
pub(crate) fn block_row_with_fill(a: &TTVector, t: usize, fill: Complex64) -> Result<TTVector> {
    let d = a.mode_count();
    if t < 1 || t >= d {
        return Err(Error::IndexOutOfRange(format!(
            "block_row needs 1 ≤ t ≤ {}, got {t}",
            d - 1
        )));
    }
    let pulled = pull(a, fill);
    Ok(reverse(&leading_block(&pulled, t)?))
}

/// Concatenate two `t`-digit vectors into a `t+1`-digit vector whose new most
/// significant digit selects the half: block-diagonal core merge closed by the
/// selector core `[1−k; k]`.
pub fn interleave_concat(first: &TTVector, second: &TTVector) -> Result<TTVector> {
    let t = first.mode_count();
    if t != second.mode_count() {
        return Err(Error::ModeMismatch(t, second.mode_count()));
    }
    let (b, g) = (first.cores(), second.cores());
    let mut out = Vec::with_capacity(t + 1);
    for p in 0..t {
        if p == 0 {
            out.push(Core::new(
                hcat(&b[p].slices[0], &g[p].slices[0]),
                hcat(&b[p].slices[1], &g[p].slices[1]),
            ));
        } else {
            out.push(Core::new(
                block_diag(&b[p].slices[0], &g[p].slices[0]),
                block_diag(&b[p].slices[1], &g[p].slices[1]),
            ));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    out.push(Core::new(
        vcat(&scalar(one), &scalar(zero)),
        vcat(&scalar(zero), &scalar(one)),
    ));
    Ok(TTVector::from_cores(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tolerance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn quant(v: &[f64]) -> TTVector {
        TTVector::quantize_real(v, &Tolerance::new(1e-14).unwrap()).unwrap()
    }

    fn max_abs_dev(a: &TTVector, want: &[f64]) -> f64 {
        let got = a.materialize().unwrap();
        got.iter()
            .zip(want)
            .map(|(g, w)| (g - c(*w)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn push_shifts_right() {
        let a = quant(&[1.0, 2.0, 3.0, 4.0]);
        assert!(max_abs_dev(&push(&a, c(0.0)), &[0.0, 1.0, 2.0, 3.0]) < 1e-13);
        assert!(max_abs_dev(&push(&a, c(9.0)), &[9.0, 1.0, 2.0, 3.0]) < 1e-13);
    }

    #[test]
    fn push_of_ones_is_fixed_point() {
        let ones = TTVector::ones(5).unwrap();
        assert!(max_abs_dev(&push(&ones, c(1.0)), &vec![1.0; 32]) < 1e-13);
    }

    #[test]
    fn push_base_case_d1() {
        let a = quant(&[3.0, 5.0]);
        assert!(max_abs_dev(&push(&a, c(7.0)), &[7.0, 3.0]) < 1e-14);
    }

    #[test]
    fn push_matches_dense_shift_and_rank_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..10 {
            let a = TTVector::random_real(10, 5, &mut rng);
            let dense = a.materialize_real().unwrap();
            let mut want = vec![0.5];
            want.extend_from_slice(&dense[..dense.len() - 1]);
            let shifted = push(&a, c(0.5));
            let scale = dense.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(max_abs_dev(&shifted, &want) <= 1e-13 * scale);
            for (rb, ra) in shifted.ranks().iter().zip(a.ranks()) {
                assert!(*rb <= ra + 1);
            }
        }
    }

    #[test]
    fn pull_shifts_left() {
        let a = quant(&[1.0, 2.0, 3.0, 4.0]);
        assert!(max_abs_dev(&pull(&a, c(9.0)), &[2.0, 3.0, 4.0, 9.0]) < 1e-13);
    }

    #[test]
    fn pull_matches_dense_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..10 {
            let a = TTVector::random_real(9, 6, &mut rng);
            let dense = a.materialize_real().unwrap();
            let mut want = dense[1..].to_vec();
            want.push(-2.5);
            let shifted = pull(&a, c(-2.5));
            let scale = dense.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(max_abs_dev(&shifted, &want) <= 1e-13 * scale);
            for (rc, ra) in shifted.ranks().iter().zip(a.ranks()) {
                assert!(*rc <= ra + 1);
            }
        }
    }

    #[test]
    fn pull_then_push_roundtrips_interior() {
        let a = quant(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let back = push(&pull(&a, c(0.0)), c(1.0));
        assert!(max_abs_dev(&back, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]) < 1e-13);
    }

    #[test]
    fn reverse_basics() {
        let a = quant(&[1.0, 2.0, 3.0, 4.0]);
        assert!(max_abs_dev(&reverse(&a), &[4.0, 3.0, 2.0, 1.0]) < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = TTVector::random_real(8, 4, &mut rng);
        let twice = reverse(&reverse(&r));
        assert!(max_abs_dev(&twice, &r.materialize_real().unwrap()) == 0.0);
        assert!((reverse(&r).norm() - r.norm()).abs() < 1e-12 * r.norm());
        assert_eq!(reverse(&r).ranks(), r.ranks());
    }

    #[test]
    fn leading_block_slices() {
        let a = quant(&[1.0, 2.0, 3.0, 4.0]);
        assert!(max_abs_dev(&leading_block(&a, 1).unwrap(), &[1.0, 2.0]) < 1e-13);
        let full = leading_block(&a, 2).unwrap();
        assert!(max_abs_dev(&full, &[1.0, 2.0, 3.0, 4.0]) < 1e-13);
        assert!(leading_block(&a, 0).is_err());
        assert!(leading_block(&a, 3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let r = TTVector::random_real(10, 5, &mut rng);
        let dense = r.materialize_real().unwrap();
        let head = leading_block(&r, 6).unwrap();
        let scale = dense.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_dev(&head, &dense[..64]) <= 1e-13 * scale);
    }

    #[test]
    fn block_column_slices() {
        let a = quant(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert!(max_abs_dev(&block_column(&a, 2).unwrap(), &[4.0, 5.0, 6.0, 7.0]) < 1e-13);

        let ones = TTVector::ones(6).unwrap();
        assert!(max_abs_dev(&block_column(&ones, 3).unwrap(), &vec![1.0; 8]) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let r = TTVector::random_real(9, 4, &mut rng);
        let dense = r.materialize_real().unwrap();
        let t = 5;
        let got = block_column(&r, t).unwrap();
        let want = &dense[1 << t..2 << t];
        let scale = dense.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_dev(&got, want) <= 1e-13 * scale);
        assert!(block_column(&r, 9).is_err());
    }

    #[test]
    fn block_row_reverses_leading_entries() {
        let a = quant(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert!(max_abs_dev(&block_row(&a, 2).unwrap(), &[4.0, 3.0, 2.0, 1.0]) < 1e-13);

        let ones = TTVector::ones(5).unwrap();
        assert!(max_abs_dev(&block_row(&ones, 2).unwrap(), &vec![1.0; 4]) < 1e-14);
    }

    #[test]
    fn block_row_matches_dense_and_ignores_fill() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..8 {
            let r = TTVector::random_real(9, 5, &mut rng);
            let dense = r.materialize_real().unwrap();
            let t = 4;
            let want: Vec<f64> = (0..1usize << t).map(|j| dense[(1 << t) - j]).collect();
            let got_a = block_row_with_fill(&r, t, c(0.0)).unwrap();
            let got_b = block_row_with_fill(&r, t, c(123.456)).unwrap();
            let scale = dense.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(max_abs_dev(&got_a, &want) <= 1e-13 * scale);
            assert!(max_abs_dev(&got_b, &want) <= 1e-13 * scale);
            for (rg, ra) in got_a.ranks().iter().zip(r.ranks()) {
                assert!(*rg <= ra + 1);
            }
        }
    }

    #[test]
    fn interleave_concat_halves() {
        let ones = TTVector::ones(3).unwrap();
        let zeros = TTVector::zeros(3).unwrap();
        let mut want = vec![1.0; 8];
        want.extend(vec![0.0; 8]);
        assert!(max_abs_dev(&interleave_concat(&ones, &zeros).unwrap(), &want) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let b = TTVector::random_real(8, 4, &mut rng);
        let g = TTVector::random_real(8, 4, &mut rng);
        let mut want = b.materialize_real().unwrap();
        want.extend(g.materialize_real().unwrap());
        let joined = interleave_concat(&b, &g).unwrap();
        let scale = want.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_dev(&joined, &want) <= 1e-13 * scale);
        for (rj, (rb, rg)) in joined.ranks()[1..joined.mode_count()]
            .iter()
            .zip(b.ranks()[1..].iter().zip(g.ranks()[1..].iter()))
        {
            assert!(*rj <= rb + rg);
        }
    }

    #[test]
    fn interleave_concat_of_equal_vectors_rounds_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = TTVector::random_real(7, 4, &mut rng);
        let joined = interleave_concat(&b, &b).unwrap();
        let rounded = joined.round(&Tolerance::new(1e-12).unwrap()).unwrap();
        let b_min = b.round(&Tolerance::new(1e-12).unwrap()).unwrap();
        // constant in the new digit: internal ranks match the operand's
        assert_eq!(&rounded.ranks()[..b.mode_count()], &b_min.ranks()[..b.mode_count()]);
        let mut want = b.materialize_real().unwrap();
        want.extend(b.materialize_real().unwrap());
        assert!(max_abs_dev(&rounded, &want) <= 1e-11);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let a = TTVector::ones(3).unwrap();
        let b = TTVector::ones(4).unwrap();
        assert!(interleave_concat(&a, &b).is_err());
    }
}
