use thiserror::Error;

/// Errors shared by all solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input length {0} is not a power of two with at least two entries")]
    NonPowerOfTwo(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("mode count mismatch: {0} vs {1}")]
    ModeMismatch(usize, usize),
    #[error("rank {rank} hit cap {cap} at stage {stage}")]
    RankExplosion {
        stage: usize,
        rank: usize,
        cap: usize,
    },
    #[error("numerically singular operator: {0}")]
    Singular(String),
    #[error("spectrum magnitude {value:e} below reciprocal floor {floor:e}")]
    ReciprocalFloor { value: f64, floor: f64 },
    #[error("newton refinement diverged at step {step} (residual {residual:e})")]
    NewtonDiverged { step: usize, residual: f64 },
    #[error("newton reciprocal stalled after {iters} iterations (residual {residual:e})")]
    ReciprocalNoConvergence { iters: usize, residual: f64 },
    #[error(
        "cross interpolation did not reach tolerance in {sweeps} sweeps \
         (best ranks {ranks:?}, sampled error {err:e})"
    )]
    CrossNoConvergence {
        sweeps: usize,
        ranks: Vec<usize>,
        err: f64,
    },
    #[error("materialization of 2^{d} entries exceeds guard of 2^{limit}")]
    LengthOverflow { d: usize, limit: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad serialized payload: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
