//! Solvers for linear fractional-order initial value problems built on
//! QTT-compressed triangular Toeplitz inversion.
//!
//! The pipeline discretizes the weakly singular Volterra form of the problem
//! on a uniform grid, assembles the resulting lower-triangular Toeplitz
//! system, and inverts it either densely (recurrence, divide and conquer,
//! Bini's circulant embedding) or in the quantized tensor-train format where
//! all work happens on compressed cores.

pub mod conv;
pub mod cross;
pub mod error;
pub mod fourier;
mod lin;
pub mod profile;
pub mod serial;
pub mod shift;
pub mod special;
pub mod toeplitz;
mod train;
pub mod tt;

pub use conv::{causal_conv_dense, qtt_convolve, qtt_reciprocal, toeplitz_matvec_dense, ConvMethod};
pub use cross::{qtt_from_oracle, qtt_from_oracle_with_report, CrossOptions, CrossReport};
pub use error::{Error, Result};
pub use fourier::{fft_dense, qtt_fft, Direction, FftPlan};
pub mod volterra;

pub use special::{gamma, ln_gamma, mittag_leffler, mittag_leffler_alpha};
pub use volterra::{
    analytic_constant_forcing, laplace_discrete, laplace_exact_powerforcing, quad_weight, solve,
    system_generator_dense, system_generator_qtt, Forcing, FracProblem, SolveReport,
};
pub use toeplitz::{
    decay_profile, invert, invert_dense_bini, invert_dense_dc, invert_qtt_bini, invert_qtt_dc,
    invert_recurrence, newton_refine_dense, newton_refine_qtt, DecayProfile, GeneratorData,
    InversionConfig, InversionReport, InvertMethod, ToeplitzOperator,
};
pub use profile::{effective_rank, rank_profile, RankProfile};
pub use serial::{load_tt, read_tt, save_tt, to_debug_json, write_tt};
pub use shift::{block_column, block_row, interleave_concat, leading_block, pull, push, reverse};
pub use tt::{TTVector, Tolerance};
