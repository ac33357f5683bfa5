//! Cross interpolation: build a QTT vector from an element accessor without
//! touching all 2^d entries.
//!
//! Greedy rank-adaptive scheme over nested index sets. A left-to-right pass
//! assembles interpolative cores from skeleton evaluations and reselects
//! prefix pivots by maxvol; a right-to-left pass reselects suffix pivots
//! from the children of the current sets. Between sweeps the suffix sets are
//! enriched with fresh random indices until a random-sample validation
//! estimate meets the target. The accessor call count is telemetry — for the
//! kernel family this stays far below 2^d, but nothing hard-asserts it.

use std::cell::Cell;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lin::{svd_econ, CMat};
use crate::train::Core;
use crate::tt::{TTVector, Tolerance};

#[derive(Clone, Debug)]
pub struct CrossOptions {
    /// full sweep budget
    pub max_sweeps: usize,
    pub initial_rank: usize,
    /// random entries used for the stopping estimate
    pub validation_samples: usize,
    pub seed: u64,
}

impl Default for CrossOptions {
    fn default() -> Self {
        CrossOptions {
            max_sweeps: 20,
            initial_rank: 3,
            validation_samples: 1000,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CrossReport {
    pub evaluations: usize,
    pub sweeps: usize,
    /// relative RMS error on the validation sample
    pub sampled_rel_error: f64,
}

/// Interpolate `f` on `[0, 2^d)` to relative accuracy ~`tol.rel_eps`
/// (validated on random samples; the scheme constant is about 3).
pub fn qtt_from_oracle<F: Fn(u64) -> f64>(f: F, d: usize, tol: &Tolerance) -> Result<TTVector> {
    qtt_from_oracle_with_report(f, d, tol, &CrossOptions::default()).map(|(v, _)| v)
}

pub fn qtt_from_oracle_with_report<F: Fn(u64) -> f64>(
    f: F,
    d: usize,
    tol: &Tolerance,
    options: &CrossOptions,
) -> Result<(TTVector, CrossReport)> {
    if d == 0 {
        return Err(Error::InvalidParameter("mode count must be ≥ 1".into()));
    }
    let calls = Cell::new(0usize);
    let probe = |k: u64| -> Complex64 {
        calls.set(calls.get() + 1);
        Complex64::new(f(k), 0.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    if d == 1 {
        let cores = vec![Core::new(
            CMat::from_element(1, 1, probe(0)),
            CMat::from_element(1, 1, probe(1)),
        )];
        return Ok((
            TTVector::from_cores(cores),
            CrossReport {
                evaluations: calls.get(),
                sweeps: 0,
                sampled_rel_error: 0.0,
            },
        ));
    }

    let bond_cap = |p: usize| -> usize {
        let left = 1u64 << p.min(62);
        let right = 1u64 << (d - p).min(62);
        left.min(right).min(1 << 16) as usize
    };

    // suffix sets J_p ⊂ [0, 2^{d-p}) for bonds p = 1..d-1
    let mut suffixes: Vec<Vec<u64>> = (1..d)
        .map(|p| {
            let want = bond_cap(p).min(options.initial_rank.max(1));
            distinct_random(&mut rng, 1u64 << (d - p), want)
        })
        .collect();
    let mut targets: Vec<usize> = (1..d)
        .map(|p| bond_cap(p).min(options.initial_rank.max(1)))
        .collect();

    let sample_keys: Vec<u64> = (0..options.validation_samples)
        .map(|_| rng.random_range(0..1u64 << d))
        .collect();
    let sample_vals: Vec<Complex64> = sample_keys.iter().map(|&k| probe(k)).collect();
    let sample_norm = sample_vals
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);

    let target_err = 3.0 * tol.rel_eps().max(1e-14);
    let mut best: Option<(TTVector, f64)> = None;
    let mut sweeps_done = 0;

    for sweep in 1..=options.max_sweeps {
        sweeps_done = sweep;
        let (cores, prefix_sets) = assemble(&probe, d, &suffixes)?;
        let vector = TTVector::from_cores(cores);

        let err = {
            let mut num = 0.0;
            for (&k, want) in sample_keys.iter().zip(&sample_vals) {
                num += (vector.get(k) - want).norm_sqr();
            }
            num.sqrt() / sample_norm
        };
        if best.as_ref().map_or(true, |(_, e)| err < *e) {
            best = Some((vector, err));
        }
        if err <= target_err {
            break;
        }

        // grow the rank targets, then reselect suffixes right-to-left from
        // the children of the current sets plus fresh random candidates
        for (idx, t) in targets.iter_mut().enumerate() {
            *t = (*t + (*t / 2).max(2)).min(bond_cap(idx + 1));
        }
        reselect_suffixes(&probe, d, &prefix_sets, &mut suffixes, &targets, &mut rng)?;
    }

    let (vector, err) = best.expect("at least one sweep ran");
    let report = CrossReport {
        evaluations: calls.get(),
        sweeps: sweeps_done,
        sampled_rel_error: err,
    };
    if err > target_err {
        return Err(Error::CrossNoConvergence {
            sweeps: sweeps_done,
            ranks: vector.ranks(),
            err,
        });
    }
    Ok((vector, report))
}

fn distinct_random(rng: &mut ChaCha8Rng, space: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count.min(space as usize) && guard < 64 * count + 64 {
        let cand = rng.random_range(0..space);
        if !out.contains(&cand) {
            out.push(cand);
        }
        guard += 1;
    }
    if out.is_empty() {
        out.push(0);
    }
    out
}

/// Left-to-right assembly: QR + maxvol interpolative cores with nested
/// prefixes. Returns the cores and the pivot prefix set of every bond.
#[allow(clippy::type_complexity)]
fn assemble<F: Fn(u64) -> Complex64>(
    probe: &F,
    d: usize,
    suffixes: &[Vec<u64>],
) -> Result<(Vec<Core>, Vec<Vec<u64>>)> {
    let mut cores = Vec::with_capacity(d);
    let mut prefix_sets = Vec::with_capacity(d - 1);
    let mut prefixes: Vec<u64> = vec![0]; // length-0 prefixes, rank 1
    for p in 1..d {
        let right = &suffixes[p - 1];
        let rows = 2 * prefixes.len();
        let mat = CMat::from_fn(rows, right.len(), |ri, j| {
            let (bit, i) = (ri / prefixes.len(), ri % prefixes.len());
            probe(prefixes[i] + ((bit as u64) << (p - 1)) + (right[j] << p))
        });
        // orthonormal basis of the sampled columns at the numerical rank
        let (u, sigma, _) = svd_econ(&mat);
        let rank = sigma
            .iter()
            .take_while(|&&s| s > 1e-13 * sigma[0].max(1e-300))
            .count()
            .max(1)
            .min(rows);
        let basis = u.columns(0, rank).into_owned();
        let pivot_rows = maxvol(&basis)?;
        // interpolative factor basis · basis[pivots]^{-1}: identity on the
        // pivot rows, so the chain reproduces skeleton entries exactly
        let pivot_block = CMat::from_fn(rank, rank, |i, j| basis[(pivot_rows[i], j)]);
        let lu = pivot_block.transpose().lu();
        let core_mat_t = lu
            .solve(&basis.transpose())
            .ok_or_else(|| Error::Singular("cross pivot block is singular".into()))?;
        let core_mat = core_mat_t.transpose();
        cores.push(Core::new(
            core_mat.rows(0, prefixes.len()).into_owned(),
            core_mat.rows(prefixes.len(), prefixes.len()).into_owned(),
        ));
        prefixes = pivot_rows
            .iter()
            .map(|&ri| {
                let (bit, i) = (ri / prefixes.len(), ri % prefixes.len());
                prefixes[i] + ((bit as u64) << (p - 1))
            })
            .collect();
        prefix_sets.push(prefixes.clone());
    }
    // last core: raw values on the final prefix set
    let rank = prefixes.len();
    let lo = CMat::from_fn(rank, 1, |i, _| probe(prefixes[i]));
    let hi = CMat::from_fn(rank, 1, |i, _| probe(prefixes[i] + (1u64 << (d - 1))));
    cores.push(Core::new(lo, hi));
    Ok((cores, prefix_sets))
}

/// Right-to-left pivot pass: at bond p choose suffixes from the children
/// `{bit + 2·s : s ∈ J_{p+1}}` of the refreshed set one bond to the right,
/// plus random candidates, scored against the bond's prefix pivots.
fn reselect_suffixes<F: Fn(u64) -> Complex64>(
    probe: &F,
    d: usize,
    prefix_sets: &[Vec<u64>],
    suffixes: &mut [Vec<u64>],
    targets: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    for p in (1..d).rev() {
        let space = 1u64 << (d - p);
        let mut candidates: Vec<u64> = if p == d - 1 {
            vec![0, 1]
        } else {
            suffixes[p]
                .iter()
                .flat_map(|&s| [2 * s, 2 * s + 1])
                .collect()
        };
        for s in &suffixes[p - 1] {
            if !candidates.contains(s) {
                candidates.push(*s);
            }
        }
        let extra = targets[p - 1].saturating_sub(candidates.len()) + 2;
        let mut guard = 0;
        while guard < 64 * (extra + 1) && candidates.len() < (targets[p - 1] + extra).min(space as usize)
        {
            let cand = rng.random_range(0..space);
            if !candidates.contains(&cand) {
                candidates.push(cand);
            }
            guard += 1;
        }

        // row sampling set: current prefix pivots plus random prefixes, so
        // the numerical rank can exceed the previous bond rank
        let mut rows = prefix_sets[p - 1].clone();
        let prefix_space = 1u64 << p;
        let want_rows = (targets[p - 1] + 4).min(prefix_space as usize);
        let mut guard = 0;
        while rows.len() < want_rows && guard < 64 * want_rows {
            let cand = rng.random_range(0..prefix_space);
            if !rows.contains(&cand) {
                rows.push(cand);
            }
            guard += 1;
        }
        let mat = CMat::from_fn(rows.len(), candidates.len(), |i, j| {
            probe(rows[i] + (candidates[j] << p))
        });
        let keep_width = targets[p - 1].min(candidates.len()).min(rows.len());
        let (_, sigma, vt) = svd_econ(&mat);
        let rank = sigma
            .iter()
            .take_while(|&&s| s > 1e-13 * sigma[0].max(1e-300))
            .count()
            .clamp(1, keep_width);
        // maxvol over the leading right singular directions picks columns
        let basis = vt.rows(0, rank).adjoint();
        let cols = maxvol(&basis)?;
        let mut chosen: Vec<u64> = cols.iter().map(|&c| candidates[c]).collect();
        chosen.sort_unstable();
        chosen.dedup();
        if chosen.is_empty() {
            chosen.push(candidates[0]);
        }
        suffixes[p - 1] = chosen;
    }
    Ok(())
}

/// Row subset with quasi-maximal volume: partial-pivot seed, then swap while
/// any entry of `A·A_S^{-1}` exceeds 1+δ.
fn maxvol(basis: &CMat) -> Result<Vec<usize>> {
    let (m, r) = basis.shape();
    debug_assert!(m >= r);
    let mut work = basis.clone();
    let mut rows: Vec<usize> = Vec::with_capacity(r);
    for col in 0..r {
        let mut best = (usize::MAX, -1.0f64);
        for i in 0..m {
            if rows.contains(&i) {
                continue;
            }
            let mag = work[(i, col)].norm();
            if mag > best.1 {
                best = (i, mag);
            }
        }
        let pivot = best.0;
        rows.push(pivot);
        let pv = work[(pivot, col)];
        if pv.norm() == 0.0 {
            continue;
        }
        for i in 0..m {
            if i == pivot {
                continue;
            }
            let factor = work[(i, col)] / pv;
            for j in col..r {
                let sub = factor * work[(pivot, j)];
                work[(i, j)] -= sub;
            }
        }
    }

    for _ in 0..100 {
        let pivot_block = CMat::from_fn(r, r, |i, j| basis[(rows[i], j)]);
        let lu = pivot_block.transpose().lu();
        let bt = match lu.solve(&basis.transpose()) {
            Some(x) => x,
            None => break,
        };
        let mut worst = (0usize, 0usize, 1.0 + 1e-2);
        for i in 0..m {
            for j in 0..r {
                let mag = bt[(j, i)].norm();
                if mag > worst.2 {
                    worst = (i, j, mag);
                }
            }
        }
        if worst.2 <= 1.0 + 1e-2 {
            break;
        }
        rows[worst.1] = worst.0;
    }
    Ok(rows)
}
