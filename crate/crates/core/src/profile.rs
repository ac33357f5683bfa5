//! Rank telemetry for compressed vectors.

use crate::tt::TTVector;

/// Per-mode ranks with the storage-equivalent constant rank.
#[derive(Clone, Debug)]
pub struct RankProfile {
    pub d: usize,
    /// `r_0..r_d`, borders included
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub effective_rank: f64,
    /// truncation target the vector was built with
    pub tol: f64,
}

/// Positive root of the storage equation: a train with constant internal
/// rank r and unit borders stores `2(d−2)·r² + 4r` scalars for d ≥ 3.
pub fn effective_rank(storage: usize, d: usize) -> f64 {
    let s = storage as f64;
    match d {
        0 => 1.0,
        1 => 1.0,
        2 => (s / 4.0).max(1.0),
        _ => {
            let dd = (d - 2) as f64;
            ((-4.0 + (16.0 + 8.0 * dd * s).sqrt()) / (4.0 * dd)).max(1.0)
        }
    }
}

pub fn rank_profile(v: &TTVector, tol: f64) -> RankProfile {
    let ranks = v.ranks();
    RankProfile {
        d: v.mode_count(),
        max_rank: ranks.iter().copied().max().unwrap_or(1),
        effective_rank: effective_rank(v.storage(), v.mode_count()),
        ranks,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::Tolerance;

    #[test]
    fn constant_vector_has_effective_rank_one() {
        for d in [1usize, 2, 3, 8, 14] {
            let tt = TTVector::ones(d).unwrap();
            let profile = rank_profile(&tt, 1e-10);
            assert!(
                (profile.effective_rank - 1.0).abs() < 1e-12,
                "d={d}: {}",
                profile.effective_rank
            );
        }
    }

    #[test]
    fn effective_rank_exact_for_constant_rank_trains() {
        // storage of a constant-rank-r train must invert to exactly r
        for d in [4usize, 9] {
            for r in [2usize, 5, 12] {
                let storage = 2 * (d - 2) * r * r + 4 * r;
                let eff = effective_rank(storage, d);
                assert!((eff - r as f64).abs() < 1e-12, "d={d} r={r}: {eff}");
            }
        }
    }

    #[test]
    fn effective_rank_bounded_by_max_rank() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let tt = TTVector::random_real(10, 6, &mut rng)
                .round(&Tolerance::new(1e-10).unwrap())
                .unwrap();
            let profile = rank_profile(&tt, 1e-10);
            assert!(profile.effective_rank >= 1.0);
            assert!(profile.effective_rank <= profile.max_rank as f64 + 1e-9);
        }
    }
}
