//! Chain-level operations on binary-mode TT cores.
//!
//! Everything here works on bare `Vec<Core>` chains and tolerates border
//! ranks other than one, which the Fourier recursion needs. The public
//! `TTVector` type wraps the unit-border case and enforces its invariants.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lin::{lq, svd_econ, truncation_rank, CMat};

/// One binary-mode TT core: two `left × right` slices, one per digit value.
#[derive(Clone, Debug)]
pub(crate) struct Core {
    pub slices: [CMat; 2],
}

impl Core {
    pub fn new(s0: CMat, s1: CMat) -> Self {
        debug_assert_eq!(s0.shape(), s1.shape());
        Core { slices: [s0, s1] }
    }

    pub fn left_rank(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn right_rank(&self) -> usize {
        self.slices[0].ncols()
    }

    /// `[s0 | s1]`, shape `left × 2·right`.
    pub fn unfold_right(&self) -> CMat {
        let (l, r) = (self.left_rank(), self.right_rank());
        CMat::from_fn(l, 2 * r, |i, j| {
            if j < r {
                self.slices[0][(i, j)]
            } else {
                self.slices[1][(i, j - r)]
            }
        })
    }

    /// `[s0; s1]`, shape `2·left × right`.
    pub fn unfold_left(&self) -> CMat {
        let (l, r) = (self.left_rank(), self.right_rank());
        CMat::from_fn(2 * l, r, |i, j| {
            if i < l {
                self.slices[0][(i, j)]
            } else {
                self.slices[1][(i - l, j)]
            }
        })
    }

    pub fn from_unfold_right(h: &CMat) -> Self {
        let r = h.ncols() / 2;
        debug_assert_eq!(h.ncols(), 2 * r);
        Core::new(
            h.columns(0, r).into_owned(),
            h.columns(r, r).into_owned(),
        )
    }

    pub fn from_unfold_left(u: &CMat) -> Self {
        let l = u.nrows() / 2;
        debug_assert_eq!(u.nrows(), 2 * l);
        Core::new(u.rows(0, l).into_owned(), u.rows(l, l).into_owned())
    }
}

pub(crate) fn ranks(cores: &[Core]) -> Vec<usize> {
    let mut out = Vec::with_capacity(cores.len() + 1);
    out.push(cores[0].left_rank());
    for c in cores {
        out.push(c.right_rank());
    }
    out
}

pub(crate) fn validate(cores: &[Core]) -> Result<()> {
    if cores.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (p, pair) in cores.windows(2).enumerate() {
        if pair[0].right_rank() != pair[1].left_rank() {
            return Err(Error::InvalidParameter(format!(
                "rank mismatch between cores {} and {}: {} vs {}",
                p,
                p + 1,
                pair[0].right_rank(),
                pair[1].left_rank()
            )));
        }
    }
    if cores.iter().any(|c| c.left_rank() == 0 || c.right_rank() == 0) {
        return Err(Error::InvalidParameter("zero rank".into()));
    }
    Ok(())
}

/// Product of the slices selected by the little-endian digits of `k`.
pub(crate) fn eval_element(cores: &[Core], k: u64) -> CMat {
    let mut acc = cores[0].slices[(k & 1) as usize].clone();
    for (p, core) in cores.iter().enumerate().skip(1) {
        let bit = ((k >> p) & 1) as usize;
        acc = acc * &core.slices[bit];
    }
    acc
}

/// Densification for unit borders. Entry `k` uses digit `p` as bit `p-1` of `k`.
pub(crate) fn materialize_vec(cores: &[Core]) -> Vec<Complex64> {
    debug_assert_eq!(cores[0].left_rank(), 1);
    debug_assert_eq!(cores.last().unwrap().right_rank(), 1);
    let mut acc = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    for core in cores {
        let lo = &acc * &core.slices[0];
        let hi = &acc * &core.slices[1];
        let (rows, cols) = (lo.nrows(), lo.ncols());
        acc = CMat::from_fn(2 * rows, cols, |i, j| {
            if i < rows {
                lo[(i, j)]
            } else {
                hi[(i - rows, j)]
            }
        });
    }
    acc.column(0).iter().copied().collect()
}

/// Frobenius norm of the (border-rows × 2^d) array the chain represents.
pub(crate) fn frob_norm(cores: &[Core]) -> f64 {
    let rho = cores[0].left_rank();
    let mut v = CMat::identity(rho, rho);
    for core in cores {
        let mut next = CMat::zeros(core.right_rank(), core.right_rank());
        for s in &core.slices {
            next += s.adjoint() * &v * s;
        }
        v = next;
    }
    let total: f64 = (0..v.nrows()).map(|i| v[(i, i)].re).sum();
    total.max(0.0).sqrt()
}

/// Hermitian inner product `Σ conj(a(k)) b(k)` for unit-border chains.
pub(crate) fn dot_chains(a: &[Core], b: &[Core]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut v = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    for (ca, cb) in a.iter().zip(b.iter()) {
        let mut next = CMat::zeros(ca.right_rank(), cb.right_rank());
        for bit in 0..2 {
            next += ca.slices[bit].adjoint() * &v * &cb.slices[bit];
        }
        v = next;
    }
    v[(0, 0)]
}

pub(crate) fn right_orthogonalize(cores: &mut [Core]) {
    for p in (1..cores.len()).rev() {
        let m = cores[p].unfold_right();
        let (l, q) = lq(&m);
        cores[p] = Core::from_unfold_right(&q);
        for bit in 0..2 {
            cores[p - 1].slices[bit] = &cores[p - 1].slices[bit] * &l;
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct TruncStats {
    pub max_rank: usize,
    pub capped: bool,
}

/// Left-to-right SVD truncation. Assumes the chain is right-orthogonal;
/// leaves cores `0..d-1` left-orthogonal with the norm in the last core.
pub(crate) fn left_truncate(
    cores: &mut [Core],
    tau_per_bond: f64,
    max_rank: Option<usize>,
) -> TruncStats {
    let d = cores.len();
    let mut stats = TruncStats {
        max_rank: 1,
        capped: false,
    };
    for p in 0..d.saturating_sub(1) {
        let m = cores[p].unfold_left();
        let (u, sigma, vt) = svd_econ(&m);
        let mut rank = truncation_rank(&sigma, tau_per_bond);
        if let Some(cap) = max_rank {
            if rank > cap {
                rank = cap;
                stats.capped = true;
            }
        }
        let rank = rank.min(sigma.len()).max(1);
        stats.max_rank = stats.max_rank.max(rank);
        cores[p] = Core::from_unfold_left(&u.columns(0, rank).into_owned());
        let mut carry = vt.rows(0, rank).into_owned();
        for (i, &s) in sigma.iter().take(rank).enumerate() {
            for j in 0..carry.ncols() {
                carry[(i, j)] *= Complex64::new(s, 0.0);
            }
        }
        for bit in 0..2 {
            cores[p + 1].slices[bit] = &carry * &cores[p + 1].slices[bit];
        }
    }
    if d == 1 {
        stats.max_rank = cores[0].left_rank().max(cores[0].right_rank());
    }
    stats
}

/// Full SVD-based rounding at relative accuracy `rel_eps`.
pub(crate) fn round_in_place(
    cores: &mut [Core],
    rel_eps: f64,
    max_rank: Option<usize>,
) -> TruncStats {
    let d = cores.len();
    if d == 1 {
        return TruncStats {
            max_rank: cores[0].left_rank().max(cores[0].right_rank()),
            capped: false,
        };
    }
    right_orthogonalize(cores);
    let norm = cores[0].unfold_right().norm();
    let tau = if rel_eps > 0.0 {
        rel_eps * norm / ((d - 1) as f64).sqrt()
    } else {
        0.0
    };
    left_truncate(cores, tau, max_rank)
}

/// Reshape `(r × c)` carry into `(2r × c/2)` by splitting off the next digit.
fn split_digit(w: &CMat) -> CMat {
    let (r, c) = w.shape();
    debug_assert_eq!(c % 2, 0);
    CMat::from_fn(2 * r, c / 2, |i, j| {
        let (bit, row) = (i / r, i % r);
        w[(row, 2 * j + bit)]
    })
}

/// TT-SVD of a dense vector of length `2^d`, `d ≥ 1`.
pub(crate) fn tt_svd(
    values: &[Complex64],
    rel_eps: f64,
    max_rank: Option<usize>,
) -> Result<Vec<Core>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NonPowerOfTwo(n));
    }
    let d = n.trailing_zeros() as usize;
    let norm = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tau = if rel_eps > 0.0 && d > 1 {
        rel_eps * norm / ((d - 1) as f64).sqrt()
    } else {
        0.0
    };

    let mut mat = CMat::from_fn(1, n, |_, j| values[j]);
    let mut cores = Vec::with_capacity(d);
    for p in 1..=d {
        mat = split_digit(&mat);
        if p == d {
            cores.push(Core::from_unfold_left(&mat));
            break;
        }
        let (u, sigma, vt) = svd_econ(&mat);
        let mut rank = truncation_rank(&sigma, tau);
        if let Some(cap) = max_rank {
            rank = rank.min(cap);
        }
        let rank = rank.min(sigma.len()).max(1);
        cores.push(Core::from_unfold_left(&u.columns(0, rank).into_owned()));
        let mut carry = vt.rows(0, rank).into_owned();
        for (i, &s) in sigma.iter().take(rank).enumerate() {
            for j in 0..carry.ncols() {
                carry[(i, j)] *= Complex64::new(s, 0.0);
            }
        }
        mat = carry;
    }
    Ok(cores)
}

pub(crate) fn constant_chain(d: usize, value: Complex64) -> Vec<Core> {
    let one = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    let val = CMat::from_element(1, 1, value);
    let mut cores = vec![Core::new(one.clone(), one); d];
    cores[d - 1] = Core::new(val.clone(), val);
    cores
}

pub(crate) fn unit_chain(d: usize) -> Vec<Core> {
    let one = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    let zero = CMat::zeros(1, 1);
    vec![Core::new(one, zero); d]
}

/// Block construction for `a + b` on unit-border chains. No rounding.
pub(crate) fn add_chains(a: &[Core], b: &[Core]) -> Vec<Core> {
    let d = a.len();
    debug_assert_eq!(d, b.len());
    if d == 1 {
        return vec![Core::new(
            &a[0].slices[0] + &b[0].slices[0],
            &a[0].slices[1] + &b[0].slices[1],
        )];
    }
    let mut out = Vec::with_capacity(d);
    for p in 0..d {
        let (sa, sb) = (&a[p], &b[p]);
        let build = |bit: usize| -> CMat {
            let (ma, mb) = (&sa.slices[bit], &sb.slices[bit]);
            if p == 0 {
                let mut m = CMat::zeros(1, ma.ncols() + mb.ncols());
                m.view_mut((0, 0), (1, ma.ncols())).copy_from(ma);
                m.view_mut((0, ma.ncols()), (1, mb.ncols())).copy_from(mb);
                m
            } else if p == d - 1 {
                let mut m = CMat::zeros(ma.nrows() + mb.nrows(), 1);
                m.view_mut((0, 0), (ma.nrows(), 1)).copy_from(ma);
                m.view_mut((ma.nrows(), 0), (mb.nrows(), 1)).copy_from(mb);
                m
            } else {
                let mut m = CMat::zeros(ma.nrows() + mb.nrows(), ma.ncols() + mb.ncols());
                m.view_mut((0, 0), ma.shape()).copy_from(ma);
                m.view_mut((ma.nrows(), ma.ncols()), mb.shape()).copy_from(mb);
                m
            }
        };
        out.push(Core::new(build(0), build(1)));
    }
    out
}

pub(crate) fn hadamard_chains(a: &[Core], b: &[Core]) -> Vec<Core> {
    a.iter()
        .zip(b.iter())
        .map(|(ca, cb)| {
            Core::new(
                ca.slices[0].kronecker(&cb.slices[0]),
                ca.slices[1].kronecker(&cb.slices[1]),
            )
        })
        .collect()
}

/// Multiply entry `k` by `ratio^k` through per-core digit scaling.
pub(crate) fn scale_geometric_chain(cores: &mut [Core], ratio: Complex64) {
    let mut factor = ratio;
    for core in cores.iter_mut() {
        core.slices[1] *= factor;
        factor *= factor;
    }
}

pub(crate) fn scale_chain(cores: &mut [Core], c: Complex64) {
    let last = cores.len() - 1;
    cores[last].slices[0] *= c;
    cores[last].slices[1] *= c;
}
