//! Inversion of lower-triangular Toeplitz matrices.
//!
//! A matrix in this class is determined by its first column (the
//! *generator*), and so is its inverse; every routine here maps generator to
//! generator. Dense paths: the O(n²) recurrence (reference oracle), divide
//! and conquer doubling, and Bini's diagonally-scaled circulant
//! approximation. Compressed paths: the same divide and conquer recursion on
//! QTT vectors, and Bini's method with the spectrum inverted by Newton
//! iteration in compressed form.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::conv::{causal_conv_dense, qtt_convolve, toeplitz_matvec_dense, ConvMethod};
use crate::error::{Error, Result};
use crate::fourier::{fft_dense, qtt_fft, Direction};
use crate::shift::{block_column, interleave_concat, leading_block};
use crate::tt::{TTVector, Tolerance};

/// Generator storage: dense first column or its QTT compression.
#[derive(Clone, Debug)]
pub enum GeneratorData {
    Dense(Vec<f64>),
    Qtt(TTVector),
}

impl GeneratorData {
    pub fn len(&self) -> u64 {
        match self {
            GeneratorData::Dense(v) => v.len() as u64,
            GeneratorData::Qtt(tt) => tt.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, k: u64) -> f64 {
        match self {
            GeneratorData::Dense(v) => v[k as usize],
            GeneratorData::Qtt(tt) => tt.get(k).re,
        }
    }

    pub fn to_dense(&self) -> Result<Vec<f64>> {
        match self {
            GeneratorData::Dense(v) => Ok(v.clone()),
            GeneratorData::Qtt(tt) => tt.materialize_real(),
        }
    }

    pub fn to_qtt(&self, tol: &Tolerance) -> Result<TTVector> {
        match self {
            GeneratorData::Dense(v) => TTVector::quantize_real(v, tol),
            GeneratorData::Qtt(tt) => Ok(tt.clone()),
        }
    }

    pub fn max_rank(&self) -> usize {
        match self {
            GeneratorData::Dense(_) => 1,
            GeneratorData::Qtt(tt) => tt.max_rank(),
        }
    }
}

/// A lower-triangular Toeplitz operator held by its first column.
#[derive(Clone, Debug)]
pub struct ToeplitzOperator {
    first_col: GeneratorData,
}

impl ToeplitzOperator {
    pub fn from_dense(first_col: Vec<f64>) -> Result<Self> {
        if first_col.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !first_col.len().is_power_of_two() {
            return Err(Error::NonPowerOfTwo(first_col.len()));
        }
        Ok(ToeplitzOperator {
            first_col: GeneratorData::Dense(first_col),
        })
    }

    pub fn from_qtt(first_col: TTVector) -> Self {
        ToeplitzOperator {
            first_col: GeneratorData::Qtt(first_col),
        }
    }

    pub fn first_col(&self) -> &GeneratorData {
        &self.first_col
    }

    pub fn len(&self) -> u64 {
        self.first_col.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Inversion backend selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvertMethod {
    Recurrence,
    DenseDc,
    DenseBini,
    DenseBiniModified,
    QttDcConv,
    QttDcFft,
    QttBini,
}

impl InvertMethod {
    pub const ALL: [InvertMethod; 7] = [
        InvertMethod::Recurrence,
        InvertMethod::DenseDc,
        InvertMethod::DenseBini,
        InvertMethod::DenseBiniModified,
        InvertMethod::QttDcConv,
        InvertMethod::QttDcFft,
        InvertMethod::QttBini,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InvertMethod::Recurrence => "recurrence",
            InvertMethod::DenseDc => "dense_dc",
            InvertMethod::DenseBini => "dense_bini",
            InvertMethod::DenseBiniModified => "dense_bini_modified",
            InvertMethod::QttDcConv => "qtt_dc_conv",
            InvertMethod::QttDcFft => "qtt_dc_fft",
            InvertMethod::QttBini => "qtt_bini",
        }
    }

    pub fn is_qtt(&self) -> bool {
        matches!(
            self,
            InvertMethod::QttDcConv | InvertMethod::QttDcFft | InvertMethod::QttBini
        )
    }
}

impl std::str::FromStr for InvertMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InvertMethod::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown inversion method `{s}`")))
    }
}

impl std::fmt::Display for InvertMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct InversionConfig {
    pub method: InvertMethod,
    pub tol: Tolerance,
    /// base-case size exponent for divide and conquer (2^d0 × 2^d0)
    pub d0: usize,
    /// target value of ε^n for the Bini family; `None` picks the method default
    pub bini_eps_pow: Option<f64>,
    pub newton_refine_steps: usize,
}

/// Default hard cap on compressed ranks; explicit failure beats silent loss.
pub const DEFAULT_RANK_CAP: usize = 128;

impl InversionConfig {
    pub fn new(method: InvertMethod) -> Self {
        InversionConfig {
            method,
            tol: Tolerance::new(1e-10)
                .and_then(|t| t.with_max_rank(DEFAULT_RANK_CAP))
                .expect("static tolerance"),
            d0: 5,
            bini_eps_pow: None,
            newton_refine_steps: 0,
        }
    }

    pub fn with_tol(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_eps_pow(mut self, eps_pow: f64) -> Result<Self> {
        if !(0.0 < eps_pow && eps_pow < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bini eps_pow must lie in (0,1), got {eps_pow}"
            )));
        }
        self.bini_eps_pow = Some(eps_pow);
        Ok(self)
    }

    pub fn eps_pow(&self) -> f64 {
        self.bini_eps_pow.unwrap_or(match self.method {
            InvertMethod::DenseBini => 0.5e-8,
            _ => 1e-5,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.d0 == 0 {
            return Err(Error::InvalidParameter("d0 must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct InversionTelemetry {
    pub max_rank: usize,
    /// max compressed rank observed after each doubling level (QTT dc only)
    pub rank_per_level: Vec<usize>,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct InversionReport {
    pub inverse: GeneratorData,
    pub method: InvertMethod,
    /// ‖a ⋆ b − e₀‖₂ of the computed inverse generator
    pub residual: f64,
    pub telemetry: InversionTelemetry,
}

fn check_leading_entry_dense(a: &[f64]) -> Result<()> {
    let max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if a[0].abs() < 1e3 * f64::EPSILON * max.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!(
            "leading generator entry {:e} below singularity floor",
            a[0]
        )));
    }
    Ok(())
}

fn check_leading_entry_qtt(a: &TTVector) -> Result<Complex64> {
    let a0 = a.get(0);
    let scale = a.norm() / (a.len() as f64).sqrt();
    if a0.norm() < 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!(
            "leading generator entry {:e} below singularity floor",
            a0.norm()
        )));
    }
    Ok(a0)
}

/// O(n²) inversion by the triangular back-substitution recurrence:
/// `b₀ = 1/a₀`, `b_j = −(1/a₀)·Σ_{k=1..j} a_k·b_{j−k}`.
pub fn invert_recurrence(a: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_leading_entry_dense(a)?;
    let n = a.len();
    let inv0 = 1.0 / a[0];
    let mut b = vec![0.0; n];
    b[0] = inv0;
    for j in 1..n {
        let mut acc = 0.0;
        for k in 1..=j {
            acc += a[k] * b[j - k];
        }
        b[j] = -inv0 * acc;
    }
    Ok(b)
}

/// One doubling step: given the generator of a `2m × 2m` matrix and the
/// inverse generator of its leading `m × m` block, return the lower half of
/// the inverse generator, `−A⁻¹·C·A⁻¹·e₀`, via two Toeplitz products.
fn dc_double_dense(a: &[f64], b_half: &[f64]) -> Result<Vec<f64>> {
    let m = b_half.len();
    debug_assert_eq!(a.len(), 2 * m);
    let col: Vec<f64> = a[m..2 * m].to_vec();
    let row_tail: Vec<f64> = (1..m).map(|q| a[m - q]).collect();
    let u = toeplitz_matvec_dense(&col, &row_tail, b_half)?;
    let v = causal_conv_dense(b_half, &u)?;
    Ok(v.into_iter().map(|x| -x).collect())
}

/// Divide and conquer inversion: recurrence on a `2^d0` base block, then
/// doubling steps with two FFT-backed Toeplitz products each.
pub fn invert_dense_dc(a: &[f64], d0: usize) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !a.len().is_power_of_two() {
        return Err(Error::NonPowerOfTwo(a.len()));
    }
    check_leading_entry_dense(a)?;
    let n = a.len();
    let base = n.min(1 << d0);
    let mut b = invert_recurrence(&a[..base])?;
    let mut m = base;
    while m < n {
        let g = dc_double_dense(&a[..2 * m], &b)?;
        b.extend(g);
        m *= 2;
    }
    Ok(b)
}

/// Bini's approximate inversion. The shift generator is perturbed into a
/// scaled circulant: scale entries by `ε^j`, diagonalize with the DFT,
/// invert the spectrum, transform back, unscale. `modified` zero-pads the
/// generator to `2n` first, which buys roughly the square of the accuracy.
pub fn invert_dense_bini(a: &[f64], eps_pow: f64, modified: bool) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !a.len().is_power_of_two() {
        return Err(Error::NonPowerOfTwo(a.len()));
    }
    if !(0.0 < eps_pow && eps_pow < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps_pow must lie in (0,1), got {eps_pow}"
        )));
    }
    check_leading_entry_dense(a)?;
    let n = a.len();
    // ε = eps_pow^{1/n} in log space
    let ln_eps = eps_pow.ln() / n as f64;
    let size = if modified { 2 * n } else { n };
    let mut scaled = vec![Complex64::new(0.0, 0.0); size];
    for (j, &v) in a.iter().enumerate() {
        scaled[j] = Complex64::new(v * (j as f64 * ln_eps).exp(), 0.0);
    }
    // spectrum of the scaled circulant: √N·F·â (unnormalized forward DFT)
    let sqrt_n = (size as f64).sqrt();
    let spectrum: Vec<Complex64> = fft_dense(&scaled, Direction::Forward)?
        .into_iter()
        .map(|z| z * sqrt_n)
        .collect();
    let max_mag = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = 1e3 * f64::EPSILON * max_mag;
    if let Some(bad) = spectrum.iter().find(|z| z.norm() <= floor) {
        return Err(Error::Singular(format!(
            "circulant eigenvalue {:e} vanishes",
            bad.norm()
        )));
    }
    let recip: Vec<Complex64> = spectrum.iter().map(|z| 1.0 / z).collect();
    let back = fft_dense(&recip, Direction::Inverse)?;
    Ok((0..n)
        .map(|j| back[j].re / sqrt_n * (-(j as f64) * ln_eps).exp())
        .collect())
}

/// Residual growth that counts as divergence; increases at the
/// machine-precision floor are rounding noise, not divergence.
const NEWTON_FLOOR: f64 = 1e-13;

/// Newton (Schulz) refinement `B ← 2B − B·A·B` on dense generators; each
/// step costs two causal convolutions.
///
/// Quadratic contraction needs `‖I − A·B₀‖ ≤ 1`, but starts outside that
/// ball can still converge when the error matrix is nilpotent in the
/// triangular Toeplitz algebra (the half-size embedding is the canonical
/// case), so the guard here is the measured column residual: any growth
/// above the noise floor aborts with the step index.
pub fn newton_refine_dense(a: &[f64], b0: &[f64], steps: usize) -> Result<Vec<f64>> {
    if a.len() != b0.len() {
        return Err(Error::InvalidParameter(format!(
            "generator lengths disagree: {} vs {}",
            a.len(),
            b0.len()
        )));
    }
    let mut b = b0.to_vec();
    let mut prev = f64::INFINITY;
    for step in 1..=steps {
        let w = causal_conv_dense(a, &b)?;
        let res: f64 = w
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let target = if j == 0 { 1.0 } else { 0.0 };
                (x - target) * (x - target)
            })
            .sum::<f64>()
            .sqrt();
        if res > prev * (1.0 + 1e-6) && res > NEWTON_FLOOR {
            return Err(Error::NewtonDiverged {
                step,
                residual: res,
            });
        }
        prev = res;
        let bw = causal_conv_dense(&b, &w)?;
        for j in 0..b.len() {
            b[j] = 2.0 * b[j] - bw[j];
        }
    }
    Ok(b)
}

/// Newton refinement on QTT generators with the same divergence monitor as
/// the dense path; all products are compressed convolutions rounded at `tol`.
pub fn newton_refine_qtt(
    a: &TTVector,
    b0: &TTVector,
    steps: usize,
    tol: &Tolerance,
    conv: ConvMethod,
) -> Result<TTVector> {
    if a.mode_count() != b0.mode_count() {
        return Err(Error::ModeMismatch(a.mode_count(), b0.mode_count()));
    }
    let d = a.mode_count();
    let e0 = TTVector::unit(d)?;
    let minus_one = -Complex64::new(1.0, 0.0);
    let mut b = b0.clone();
    let mut prev = f64::INFINITY;
    for step in 1..=steps {
        let w = qtt_convolve(a, &b, tol, conv)?;
        let res = w.add(&e0.scale(minus_one))?.norm();
        if res > prev * (1.0 + 1e-6) && res > NEWTON_FLOOR.max(10.0 * tol.rel_eps()) {
            return Err(Error::NewtonDiverged {
                step,
                residual: res,
            });
        }
        prev = res;
        let bw = qtt_convolve(&b, &w, tol, conv)?;
        b = b
            .scale(Complex64::new(2.0, 0.0))
            .add(&bw.scale(minus_one))?
            .round(tol)?;
    }
    Ok(b)
}

/// Divide and conquer in QTT format. Base block inverted densely and
/// re-compressed, then per level: first row/column of the off-diagonal
/// block by exact shifts, two compressed convolutions, concatenation, and
/// one rounding pass.
pub fn invert_qtt_dc(
    a: &TTVector,
    cfg: &InversionConfig,
    conv: ConvMethod,
) -> Result<(TTVector, InversionTelemetry)> {
    cfg.validate()?;
    let started = Instant::now();
    let d = a.mode_count();
    let a0 = check_leading_entry_qtt(a)?;
    let mut telemetry = InversionTelemetry::default();

    let d0 = cfg.d0.min(d);
    // each doubling level contributes its own rounding error, amplified by
    // the conditioning of the leading blocks; split the budget across levels
    let levels = (d - d0).max(1);
    let mut work = Tolerance::new(cfg.tol.rel_eps() / levels as f64)?;
    if let Some(cap) = cfg.tol.max_rank() {
        work = work.with_max_rank(cap)?;
    }
    let cfg = {
        let mut c = cfg.clone();
        c.tol = work;
        c
    };
    let cfg = &cfg;

    let base = leading_block(a, d0)?.materialize_real()?;
    let mut b = TTVector::quantize_real(&invert_recurrence(&base)?, &cfg.tol)?;
    telemetry.max_rank = b.max_rank();

    for t in d0..d {
        // w = [0, a(1), …, a(2^{t+1}−1)]: generator head with the diagonal
        // entry removed; feeding it the padded half-inverse gives C_t·b in
        // the upper block of the causal product
        let head = leading_block(a, t + 1)?;
        let e0 = TTVector::unit(t + 1)?;
        let w = head.add(&e0.scale(-a0))?.round(&cfg.tol)?;
        let padded = interleave_concat(&b, &TTVector::zeros(t)?)?;
        let upper = qtt_convolve(&w, &padded, &cfg.tol, conv)?;
        let u = block_column(&upper, t)?;
        let v = qtt_convolve(&b, &u, &cfg.tol, conv)?;
        let g = v.scale(-Complex64::new(1.0, 0.0));
        b = interleave_concat(&b, &g)?.round(&cfg.tol)?;

        let level_rank = b.max_rank().max(u.max_rank()).max(v.max_rank());
        telemetry.rank_per_level.push(level_rank);
        telemetry.max_rank = telemetry.max_rank.max(level_rank);
        if let Some(cap) = cfg.tol.max_rank() {
            if b.max_rank() > cap {
                return Err(Error::RankExplosion {
                    stage: t,
                    rank: b.max_rank(),
                    cap,
                });
            }
        }
    }
    telemetry.wall = started.elapsed();
    Ok((b, telemetry))
}

/// Modified Bini's method in QTT format: geometric scaling and zero-padding
/// to 2n, forward QTT-FFT, Newton reciprocal of the spectrum, inverse
/// QTT-FFT, then inverse scaling of the leading block.
///
/// Truncation inside must be far tighter than the circulant perturbation:
/// the closing `ε^{-k}` unscaling amplifies spectral-side noise by up to
/// `1/ε^n`, so the working threshold is `eps_pow · 1e-6` (floored near
/// machine precision) rather than merely below `eps_pow`.
pub fn invert_qtt_bini(
    a: &TTVector,
    cfg: &InversionConfig,
) -> Result<(TTVector, InversionTelemetry)> {
    cfg.validate()?;
    let started = Instant::now();
    let d = a.mode_count();
    check_leading_entry_qtt(a)?;
    let eps_pow = cfg.eps_pow();
    let n = (1u64 << d) as f64;
    let eps = (eps_pow.ln() / n).exp();

    let work_eps = (eps_pow * 1e-6)
        .min(cfg.tol.rel_eps())
        .max(5e-14);
    let mut work = Tolerance::new(work_eps)?;
    if let Some(cap) = cfg.tol.max_rank() {
        work = work.with_max_rank(cap)?;
    }

    let scaled = a.scale_geometric(Complex64::new(eps, 0.0))?;
    let padded = interleave_concat(&scaled, &TTVector::zeros(d)?)?;
    let sqrt2n = (2.0 * n).sqrt();
    let spectrum = qtt_fft(&padded, Direction::Forward, &work)?
        .scale(Complex64::new(sqrt2n, 0.0));
    let recip = crate::conv::qtt_reciprocal(&spectrum, &work, 80)?;
    let back = qtt_fft(&recip, Direction::Inverse, &work)?
        .scale(Complex64::new(1.0 / sqrt2n, 0.0));
    let b = leading_block(&back, d)?
        .scale_geometric(Complex64::new(1.0 / eps, 0.0))?
        .round(&cfg.tol)?;

    let telemetry = InversionTelemetry {
        max_rank: b.max_rank().max(spectrum.max_rank()).max(recip.max_rank()),
        rank_per_level: Vec::new(),
        wall: started.elapsed(),
    };
    Ok((b, telemetry))
}

/// Invert through the configured backend and report the defining-property
/// residual `‖a ⋆ b − e₀‖₂`.
pub fn invert(op: &ToeplitzOperator, cfg: &InversionConfig) -> Result<InversionReport> {
    cfg.validate()?;
    let started = Instant::now();
    let (inverse, mut telemetry) = match cfg.method {
        InvertMethod::Recurrence => {
            let a = op.first_col().to_dense()?;
            (
                GeneratorData::Dense(invert_recurrence(&a)?),
                InversionTelemetry::default(),
            )
        }
        InvertMethod::DenseDc => {
            let a = op.first_col().to_dense()?;
            (
                GeneratorData::Dense(invert_dense_dc(&a, cfg.d0)?),
                InversionTelemetry::default(),
            )
        }
        InvertMethod::DenseBini | InvertMethod::DenseBiniModified => {
            let a = op.first_col().to_dense()?;
            let modified = cfg.method == InvertMethod::DenseBiniModified;
            (
                GeneratorData::Dense(invert_dense_bini(&a, cfg.eps_pow(), modified)?),
                InversionTelemetry::default(),
            )
        }
        InvertMethod::QttDcConv | InvertMethod::QttDcFft => {
            let a = op.first_col().to_qtt(&cfg.tol)?;
            let conv = if cfg.method == InvertMethod::QttDcConv {
                ConvMethod::Kazeev
            } else {
                ConvMethod::Fourier
            };
            let (b, telemetry) = invert_qtt_dc(&a, cfg, conv)?;
            (GeneratorData::Qtt(b), telemetry)
        }
        InvertMethod::QttBini => {
            let a = op.first_col().to_qtt(&cfg.tol)?;
            let (b, telemetry) = invert_qtt_bini(&a, cfg)?;
            (GeneratorData::Qtt(b), telemetry)
        }
    };

    let inverse = if cfg.newton_refine_steps > 0 {
        match inverse {
            GeneratorData::Dense(b) => {
                let a = op.first_col().to_dense()?;
                GeneratorData::Dense(newton_refine_dense(&a, &b, cfg.newton_refine_steps)?)
            }
            GeneratorData::Qtt(b) => {
                let a = op.first_col().to_qtt(&cfg.tol)?;
                GeneratorData::Qtt(newton_refine_qtt(
                    &a,
                    &b,
                    cfg.newton_refine_steps,
                    &cfg.tol,
                    ConvMethod::Kazeev,
                )?)
            }
        }
    } else {
        inverse
    };

    let residual = inversion_residual(op.first_col(), &inverse, &cfg.tol)?;
    telemetry.wall = started.elapsed();
    telemetry.max_rank = telemetry.max_rank.max(inverse.max_rank());
    Ok(InversionReport {
        inverse,
        method: cfg.method,
        residual,
        telemetry,
    })
}

/// `‖a ⋆ b − e₀‖₂` evaluated in whichever representation both sides admit.
pub fn inversion_residual(
    a: &GeneratorData,
    b: &GeneratorData,
    tol: &Tolerance,
) -> Result<f64> {
    match (a, b) {
        (GeneratorData::Dense(a), GeneratorData::Dense(b)) => {
            let w = causal_conv_dense(a, b)?;
            Ok(w.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let target = if j == 0 { 1.0 } else { 0.0 };
                    (x - target) * (x - target)
                })
                .sum::<f64>()
                .sqrt())
        }
        _ => {
            let qa = a.to_qtt(tol)?;
            let qb = b.to_qtt(tol)?;
            let w = qtt_convolve(&qa, &qb, tol, ConvMethod::Kazeev)?;
            let e0 = TTVector::unit(qa.mode_count())?;
            Ok(w.add(&e0.scale(-Complex64::new(1.0, 0.0)))?.norm())
        }
    }
}

/// Element-magnitude decay profile of a generator with a two-piece
/// log-log slope fit.
#[derive(Clone, Debug)]
pub struct DecayProfile {
    /// (index p ≥ 1, |entry(p)|), log-spaced
    pub samples: Vec<(u64, f64)>,
    /// |a₀ / a₁|
    pub diag_ratio: f64,
    pub early_slope: f64,
    pub late_slope: f64,
    pub bend_index: Option<u64>,
}

pub fn decay_profile(gen: &GeneratorData, sample_count: usize) -> Result<DecayProfile> {
    let n = gen.len();
    if n < 4 {
        return Err(Error::InvalidParameter(
            "decay profile needs at least 4 entries".into(),
        ));
    }
    let entry = |k: u64| gen.entry(k);

    // log-spaced distinct indices in [1, n−1]
    let mut indices = Vec::with_capacity(sample_count);
    let lo = 1f64.ln();
    let hi = ((n - 1) as f64).ln();
    for i in 0..sample_count {
        let f = if sample_count == 1 {
            0.0
        } else {
            i as f64 / (sample_count - 1) as f64
        };
        let idx = (lo + f * (hi - lo)).exp().round() as u64;
        indices.push(idx.clamp(1, n - 1));
    }
    indices.sort_unstable();
    indices.dedup();

    let samples: Vec<(u64, f64)> = indices.iter().map(|&p| (p, entry(p).abs())).collect();
    let diag_ratio = (entry(0) / entry(1)).abs();

    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(p, v)| ((p as f64).ln(), v.ln()))
        .collect();

    // The profile is two power laws joined by a wide smooth transition, so
    // the rates are measured on extreme windows well away from both the
    // diagonal jump and the crossover. The bend is where the fitted
    // asymptotes intersect.
    let early_lo = (16.min(n / 8).max(2) as f64).ln();
    let early_hi = (256.min(n / 4).max(4) as f64).ln();
    let late_lo = ((n / 8).max(2) as f64).ln();
    let window = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        points
            .iter()
            .copied()
            .filter(|&(x, _)| x >= lo && x <= hi)
            .collect()
    };
    let mut early_pts = window(early_lo, early_hi);
    if early_pts.len() < 3 {
        early_pts = points.clone();
    }
    let mut late_pts = window(late_lo, f64::INFINITY);
    if late_pts.len() < 3 {
        late_pts = points.clone();
    }
    let (early_slope, early_icept) = linear_fit(&early_pts);
    let (late_slope, late_icept) = linear_fit(&late_pts);

    let bend_index = if (early_slope - late_slope).abs() > 0.05 {
        let x = (late_icept - early_icept) / (early_slope - late_slope);
        let p = x.exp();
        if p.is_finite() && p >= 1.0 && p <= n as f64 {
            Some(p.round() as u64)
        } else {
            None
        }
    } else {
        None
    };

    Ok(DecayProfile {
        samples,
        diag_ratio,
        early_slope,
        late_slope,
        bend_index,
    })
}

fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / denom;
    ((slope), (sy - slope * sx) / n)
}
