//! Vectors of length 2^d in the quantized tensor-train format.
//!
//! A `TTVector` stores a chain of d binary-mode cores; entry `k` is the
//! product of the slices selected by the little-endian binary digits of `k`
//! (digit 1 is the least significant bit). Unit border ranks are enforced so
//! every entry contracts to a scalar.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lin::CMat;
use crate::train::{self, Core};

/// Default guard for densification: refuse to materialize beyond 2^24 entries.
pub const MATERIALIZE_GUARD: usize = 24;

/// Relative truncation target with an optional hard rank cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    rel_eps: f64,
    max_rank: Option<usize>,
}

impl Tolerance {
    /// `rel_eps` is a relative Frobenius-norm target in `[0, 1)`;
    /// zero requests exact (lossless) truncation.
    pub fn new(rel_eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rel_eps) {
            return Err(Error::InvalidParameter(format!(
                "rel_eps must lie in [0, 1), got {rel_eps}"
            )));
        }
        Ok(Tolerance {
            rel_eps,
            max_rank: None,
        })
    }

    pub fn exact() -> Self {
        Tolerance {
            rel_eps: 0.0,
            max_rank: None,
        }
    }

    pub fn with_max_rank(mut self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidParameter("max_rank must be ≥ 1".into()));
        }
        self.max_rank = Some(cap);
        Ok(self)
    }

    pub fn rel_eps(&self) -> f64 {
        self.rel_eps
    }

    pub fn max_rank(&self) -> Option<usize> {
        self.max_rank
    }
}

#[derive(Clone, Debug)]
pub struct TTVector {
    cores: Vec<Core>,
}

impl TTVector {
    pub(crate) fn from_cores(cores: Vec<Core>) -> Self {
        debug_assert!(train::validate(&cores).is_ok());
        debug_assert_eq!(cores[0].left_rank(), 1);
        debug_assert_eq!(cores.last().unwrap().right_rank(), 1);
        TTVector { cores }
    }

    pub(crate) fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub(crate) fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    /// Number of binary modes `d`; the represented length is `2^d`.
    pub fn mode_count(&self) -> usize {
        self.cores.len()
    }

    pub fn len(&self) -> u64 {
        1u64 << self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rank profile `r_0..r_d` (borders included, both 1).
    pub fn ranks(&self) -> Vec<usize> {
        train::ranks(&self.cores)
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Stored scalars: `Σ_p 2·r_{p-1}·r_p`.
    pub fn storage(&self) -> usize {
        self.cores
            .iter()
            .map(|c| 2 * c.left_rank() * c.right_rank())
            .sum()
    }

    /// TT-SVD compression of a dense complex vector of length `2^d`, `d ≥ 1`.
    pub fn quantize(values: &[Complex64], tol: &Tolerance) -> Result<Self> {
        let cores = train::tt_svd(values, tol.rel_eps(), tol.max_rank())?;
        Ok(TTVector::from_cores(cores))
    }

    pub fn quantize_real(values: &[f64], tol: &Tolerance) -> Result<Self> {
        let promoted: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::quantize(&promoted, tol)
    }

    /// All-ones vector of length `2^d`.
    pub fn ones(d: usize) -> Result<Self> {
        Self::constant(d, Complex64::new(1.0, 0.0))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::constant(d, Complex64::new(0.0, 0.0))
    }

    pub fn constant(d: usize, value: Complex64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("mode count must be ≥ 1".into()));
        }
        Ok(TTVector::from_cores(train::constant_chain(d, value)))
    }

    /// First unit vector `e_0`.
    pub fn unit(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("mode count must be ≥ 1".into()));
        }
        Ok(TTVector::from_cores(train::unit_chain(d)))
    }

    /// Geometric vector `[ratio^k]`, all ranks one.
    pub fn geometric(d: usize, ratio: Complex64) -> Result<Self> {
        Self::ones(d)?.scale_geometric(ratio)
    }

    pub fn materialize(&self) -> Result<Vec<Complex64>> {
        self.materialize_guarded(MATERIALIZE_GUARD)
    }

    pub fn materialize_guarded(&self, guard: usize) -> Result<Vec<Complex64>> {
        let d = self.mode_count();
        if d > guard {
            return Err(Error::LengthOverflow { d, limit: guard });
        }
        Ok(train::materialize_vec(&self.cores))
    }

    /// Real parts of the densified vector.
    pub fn materialize_real(&self) -> Result<Vec<f64>> {
        Ok(self.materialize()?.into_iter().map(|z| z.re).collect())
    }

    /// Entry `k` in `O(d·r²)` time.
    pub fn get(&self, k: u64) -> Complex64 {
        debug_assert!(k < self.len());
        train::eval_element(&self.cores, k)[(0, 0)]
    }

    /// SVD-based re-compression. Never increases any rank; the result is
    /// left-orthogonal with the norm carried in the last core.
    pub fn round(&self, tol: &Tolerance) -> Result<Self> {
        let mut cores = self.cores.clone();
        train::round_in_place(&mut cores, tol.rel_eps(), tol.max_rank());
        Ok(TTVector::from_cores(cores))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        Ok(TTVector::from_cores(train::add_chains(
            &self.cores,
            &other.cores,
        )))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut cores = self.cores.clone();
        train::scale_chain(&mut cores, c);
        TTVector::from_cores(cores)
    }

    /// Elementwise product; ranks multiply before any rounding.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        Ok(TTVector::from_cores(train::hadamard_chains(
            &self.cores,
            &other.cores,
        )))
    }

    /// Hermitian inner product, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> Result<Complex64> {
        self.check_modes(other)?;
        Ok(train::dot_chains(&self.cores, &other.cores))
    }

    pub fn norm(&self) -> f64 {
        train::frob_norm(&self.cores)
    }

    pub fn conj(&self) -> Self {
        let cores = self
            .cores
            .iter()
            .map(|c| Core::new(c.slices[0].map(|z| z.conj()), c.slices[1].map(|z| z.conj())))
            .collect();
        TTVector::from_cores(cores)
    }

    /// Multiply entry `k` by `ratio^k`; exact, ranks unchanged.
    pub fn scale_geometric(&self, ratio: Complex64) -> Result<Self> {
        if ratio.norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "geometric ratio must be nonzero".into(),
            ));
        }
        let mut cores = self.cores.clone();
        train::scale_geometric_chain(&mut cores, ratio);
        Ok(TTVector::from_cores(cores))
    }

    /// Random real-valued vector with ranks `min(rank, 2^p, 2^{d-p})`.
    pub fn random_real<R: Rng>(d: usize, rank: usize, rng: &mut R) -> Self {
        Self::random_impl(d, rank, rng, false)
    }

    pub fn random_complex<R: Rng>(d: usize, rank: usize, rng: &mut R) -> Self {
        Self::random_impl(d, rank, rng, true)
    }

    fn random_impl<R: Rng>(d: usize, rank: usize, rng: &mut R, complex: bool) -> Self {
        assert!(d >= 1 && rank >= 1);
        let bond = |p: usize| -> usize {
            if p == 0 || p == d {
                return 1;
            }
            let cap_left = 1usize << p.min(30);
            let cap_right = 1usize << (d - p).min(30);
            rank.min(cap_left).min(cap_right).max(1)
        };
        let mut cores = Vec::with_capacity(d);
        for p in 0..d {
            let (l, r) = (bond(p), bond(p + 1));
            let mut draw = || -> CMat {
                CMat::from_fn(l, r, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
                    Complex64::new(re, im)
                })
            };
            cores.push(Core::new(draw(), draw()));
        }
        TTVector::from_cores(cores)
    }

    fn check_modes(&self, other: &Self) -> Result<()> {
        if self.mode_count() != other.mode_count() {
            return Err(Error::ModeMismatch(self.mode_count(), other.mode_count()));
        }
        Ok(())
    }
}
