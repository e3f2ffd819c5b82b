//! Thresholding encoder plus sign-based approximate gradient descent on
//! the dictionary.
//!
//! Each step encodes every partial sample with the scaled adjoint
//! `(1/ρ) Aᵀ y`, keeps the entries the encoder selects, and moves the
//! iterate against
//!
//! ```text
//! ĝ = (1/p) Σ (P_Γ(A x) − y) sgn(x)ᵀ
//! ```
//!
//! Theory-faithful runs use [`Encoder::Threshold`] with fresh samples every
//! step; the experiment protocol uses [`Encoder::TopK`] on one reused pool.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{hungarian_match, EvalError};
use crate::genmodel::{generate_batch, sign, GroundTruth, ModelConfig, ModelError, PartialSample, SparseCode};
use crate::numerics::{spectral_norm, Matrix, NumericsError, PowerIteration};
use crate::par;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid descent configuration: {0}")]
    InvalidConfig(String),
    #[error("sample source exhausted: {0}")]
    DataExhausted(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which coordinates of `(1/ρ) Aᵀ y` the encoder keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoder {
    /// Keep entries with magnitude at least `C/2`.
    Threshold,
    /// Keep the `k` largest magnitudes (ties go to the lower index).
    TopK,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    /// A new batch every step.
    Fresh,
    /// Every step draws with replacement from one pool.
    FixedPool,
}

/// Learning-rate constant in `η = c · m/(ρk)`, picked by the calibration
/// sweep over {0.125, 0.25, 0.5, 1.0} (see `examples/calibrate_eta.rs`).
pub const ETA_SCALE: f64 = 0.25;

/// `ETA_SCALE · m/(ρk)`
pub fn default_eta(n: usize, m: usize, k: usize, rho: f64) -> f64 {
    let _ = n;
    eta_with_scale(ETA_SCALE, m, k, rho)
}

pub fn eta_with_scale(scale: f64, m: usize, k: usize, rho: f64) -> f64 {
    scale * m as f64 / (rho * k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub eta: f64,
    pub steps: usize,
    pub encoder: Encoder,
    pub samples_per_step: usize,
    pub resample: Resample,
    /// Rescale iterate columns to unit norm after each step. Off by default.
    #[serde(default)]
    pub renormalize: bool,
}

impl DescentConfig {
    pub fn validate(&self) -> Result<(), DescentError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(DescentError::InvalidConfig(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if self.samples_per_step == 0 {
            return Err(DescentError::InvalidConfig("samples_per_step must be >= 1".into()));
        }
        Ok(())
    }
}

/// Model quantities the encoder needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderParams {
    pub rho: f64,
    pub k: usize,
    pub c: f64,
    pub encoder: Encoder,
}

impl EncoderParams {
    pub fn from_model(model: &ModelConfig, encoder: Encoder) -> Self {
        EncoderParams {
            rho: model.rho,
            k: model.k,
            c: model.c,
            encoder,
        }
    }
}

/// Encodes one partial sample. Returns the dense length-m code.
pub fn encode(a: &Matrix, y: &PartialSample, params: &EncoderParams) -> Result<Vec<f64>, DescentError> {
    if y.dim() != a.rows() {
        return Err(DescentError::DimensionMismatch(format!(
            "sample length {} vs dictionary rows {}",
            y.dim(),
            a.rows()
        )));
    }
    let m = a.cols();
    let mut z = vec![0.0; m];
    for &i in &y.observed {
        let yi = y.values[i];
        if yi != 0.0 {
            for (zj, aij) in z.iter_mut().zip(a.row(i)) {
                *zj += aij * yi;
            }
        }
    }
    let inv_rho = 1.0 / params.rho;
    z.iter_mut().for_each(|v| *v *= inv_rho);
    match params.encoder {
        Encoder::Threshold => {
            let cut = params.c / 2.0;
            z.iter_mut().for_each(|v| {
                if v.abs() < cut {
                    *v = 0.0;
                }
            });
        }
        Encoder::TopK => {
            let k = params.k.min(m);
            if k < m {
                let mut order: Vec<usize> = (0..m).collect();
                let cmp = |a: &usize, b: &usize| {
                    z[*b].abs().total_cmp(&z[*a].abs()).then(a.cmp(b))
                };
                if k > 0 {
                    order.select_nth_unstable_by(k - 1, cmp);
                }
                for &j in &order[k..] {
                    z[j] = 0.0;
                }
            }
        }
    }
    Ok(z)
}

/// `(1/p) Σ (P_Γ(A x) − y) sgn(x)ᵀ` over aligned samples and codes.
pub fn approx_gradient(a: &Matrix, batch: &[PartialSample], codes: &[Vec<f64>]) -> Result<Matrix, DescentError> {
    if batch.is_empty() {
        return Err(DescentError::EmptyBatch);
    }
    if batch.len() != codes.len() {
        return Err(DescentError::DimensionMismatch(format!(
            "{} samples but {} codes",
            batch.len(),
            codes.len()
        )));
    }
    let (n, m) = a.shape();
    if let Some(bad) = batch.iter().find(|s| s.dim() != n) {
        return Err(DescentError::DimensionMismatch(format!("sample of length {} for {n} rows", bad.dim())));
    }
    if let Some(bad) = codes.iter().find(|c| c.len() != m) {
        return Err(DescentError::DimensionMismatch(format!("code of length {} for {m} columns", bad.len())));
    }
    let indices: Vec<usize> = (0..batch.len()).collect();
    let sum = par::chunked_reduce(
        &indices,
        |_, chunk| {
            let mut g = Matrix::zeros(n, m);
            let mut support: Vec<(usize, f64, f64)> = Vec::with_capacity(m);
            for &s in chunk {
                let (y, x) = (&batch[s], &codes[s]);
                support.clear();
                support.extend(
                    x.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(j, v)| (j, *v, sign(*v))),
                );
                if support.is_empty() {
                    continue;
                }
                for &i in &y.observed {
                    let arow = a.row(i);
                    let fit: f64 = support.iter().map(|(j, v, _)| arow[*j] * v).sum();
                    let r = fit - y.values[i];
                    if r != 0.0 {
                        let grow = g.row_mut(i);
                        for (j, _, sg) in &support {
                            grow[*j] += r * sg;
                        }
                    }
                }
            }
            g
        },
        |mut acc, part| {
            acc.axpy(1.0, &part).expect("same shape");
            acc
        },
    )
    .expect("non-empty batch");
    Ok(sum.scale(1.0 / batch.len() as f64))
}

/// Encodes a batch in parallel.
pub fn encode_batch(a: &Matrix, batch: &[PartialSample], params: &EncoderParams) -> Result<Vec<Vec<f64>>, DescentError> {
    par::map(batch, |y| encode(a, y, params)).into_iter().collect()
}

/// One encode + gradient + update.
pub fn descent_step(
    a: &Matrix,
    batch: &[PartialSample],
    eta: f64,
    params: &EncoderParams,
    renormalize: bool,
) -> Result<Matrix, DescentError> {
    let codes = encode_batch(a, batch, params)?;
    step_with_codes(a, batch, &codes, eta, renormalize)
}

fn step_with_codes(
    a: &Matrix,
    batch: &[PartialSample],
    codes: &[Vec<f64>],
    eta: f64,
    renormalize: bool,
) -> Result<Matrix, DescentError> {
    let g = approx_gradient(a, batch, codes)?;
    let mut next = a.clone();
    next.axpy(-eta, &g)?;
    if renormalize {
        next.normalize_columns();
    }
    Ok(next)
}

/// Where the per-step batches come from.
pub enum SampleSource<'a> {
    /// A fixed collection of partial samples, optionally with the codes
    /// that generated them (used only for tracing).
    Pool {
        samples: &'a [PartialSample],
        truth: Option<&'a [GroundTruth<SparseCode>]>,
    },
    /// Draw new samples from the generative model.
    Model { model: &'a ModelConfig, a_star: &'a Matrix },
}

struct Batch {
    samples: Vec<PartialSample>,
    truth: Option<Vec<GroundTruth<SparseCode>>>,
}

struct BatchDrawer<'a> {
    source: SampleSource<'a>,
    resample: Resample,
    per_step: usize,
    fresh_cursor: usize,
    // Fixed-pool mode over a model source draws this once.
    owned_pool: Option<(Vec<PartialSample>, Vec<GroundTruth<SparseCode>>)>,
}

impl<'a> BatchDrawer<'a> {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Batch, DescentError> {
        let p = self.per_step;
        match (&self.source, self.resample) {
            (SampleSource::Model { model, a_star }, Resample::Fresh) => {
                let (samples, truth) = generate_batch(model, a_star, p, rng)?.into_iter().unzip();
                Ok(Batch { samples, truth: Some(truth) })
            }
            (SampleSource::Pool { samples, truth }, Resample::Fresh) => {
                let start = self.fresh_cursor;
                let end = start + p;
                if end > samples.len() {
                    return Err(DescentError::DataExhausted(format!(
                        "fresh resampling needs {end} samples but the pool holds {} and no generator was given",
                        samples.len()
                    )));
                }
                self.fresh_cursor = end;
                Ok(Batch {
                    samples: samples[start..end].to_vec(),
                    truth: truth.map(|t| t[start..end].to_vec()),
                })
            }
            (SampleSource::Model { model, a_star }, Resample::FixedPool) => {
                if self.owned_pool.is_none() {
                    self.owned_pool = Some(generate_batch(model, a_star, p, rng)?.into_iter().unzip());
                }
                let (pool, truth) = self.owned_pool.as_ref().expect("pool drawn");
                Ok(draw_with_replacement(pool, Some(truth), p, rng))
            }
            (SampleSource::Pool { samples, truth }, Resample::FixedPool) => {
                if samples.is_empty() {
                    return Err(DescentError::DataExhausted("empty sample pool".into()));
                }
                Ok(draw_with_replacement(samples, *truth, p, rng))
            }
        }
    }
}

fn draw_with_replacement<R: Rng + ?Sized>(
    pool: &[PartialSample],
    truth: Option<&[GroundTruth<SparseCode>]>,
    count: usize,
    rng: &mut R,
) -> Batch {
    let picks: Vec<usize> = (0..count).map(|_| rng.random_range(0..pool.len())).collect();
    Batch {
        samples: picks.iter().map(|&i| pool[i].clone()).collect(),
        truth: truth.map(|t| picks.iter().map(|&i| t[i].clone()).collect()),
    }
}

/// One row of the descent trace. Error columns are NaN without ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub max_col_err: f64,
    pub frob_err: f64,
    pub spec_norm: f64,
    /// Spectral norm of the aligned difference to the truth.
    pub diff_spec_norm: f64,
    pub support_consistency_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
}

impl DescentTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,max_col_err,frob_err,spec_norm,support_consistency_rate")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.step, r.max_col_err, r.frob_err, r.spec_norm, r.support_consistency_rate
            )?;
        }
        Ok(())
    }

    pub fn max_col_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_col_err).collect()
    }
}

/// Fraction of samples whose encoded sign pattern equals the true one,
/// after mapping estimate columns onto truth columns.
pub fn support_consistency(
    codes: &[Vec<f64>],
    truth: &[GroundTruth<SparseCode>],
    permutation: &[usize],
    signs: &[f64],
) -> f64 {
    if codes.is_empty() {
        return f64::NAN;
    }
    let hits = codes
        .iter()
        .zip(truth)
        .filter(|(x, t)| {
            let t = t.reveal();
            permutation
                .iter()
                .zip(signs)
                .enumerate()
                .all(|(i, (&j, s))| sign(s * x[j]) == sign(t.values[i]))
        })
        .count();
    hits as f64 / codes.len() as f64
}

fn trace_row(
    step: usize,
    a: &Matrix,
    a_star: Option<&Matrix>,
    consistency: Option<(&[Vec<f64>], &[GroundTruth<SparseCode>])>,
    power: &PowerIteration,
) -> Result<TraceRow, DescentError> {
    let spec = spectral_norm(a, power)?;
    let mut row = TraceRow {
        step,
        max_col_err: f64::NAN,
        frob_err: f64::NAN,
        spec_norm: spec,
        diff_spec_norm: f64::NAN,
        support_consistency_rate: f64::NAN,
    };
    if let Some(star) = a_star {
        let matching = hungarian_match(a, star)?;
        let diff = matching.align(a).sub(star)?;
        row.max_col_err = matching.max_err;
        row.frob_err = matching.frob_err;
        row.diff_spec_norm = if diff.as_slice().iter().all(|v| *v == 0.0) {
            0.0
        } else {
            spectral_norm(&diff, power)?
        };
        if let Some((codes, truth)) = consistency {
            row.support_consistency_rate = support_consistency(codes, truth, &matching.permutation, &matching.signs);
        }
    }
    Ok(row)
}

/// Runs `cfg.steps` descent steps from `a0`.
///
/// With `a_star` the trace records errors after optimal alignment; the
/// support-consistency column is filled when the source also carries codes.
pub fn run_descent<R: Rng + ?Sized>(
    a0: &Matrix,
    cfg: &DescentConfig,
    params: &EncoderParams,
    source: SampleSource<'_>,
    a_star: Option<&Matrix>,
    rng: &mut R,
) -> Result<(Matrix, DescentTrace), DescentError> {
    cfg.validate()?;
    if let SampleSource::Model { a_star: gen_star, .. } = &source {
        if gen_star.shape() != a0.shape() {
            return Err(DescentError::DimensionMismatch(format!(
                "iterate {:?} vs generator dictionary {:?}",
                a0.shape(),
                gen_star.shape()
            )));
        }
    }
    if let Some(star) = a_star {
        if star.shape() != a0.shape() {
            return Err(DescentError::DimensionMismatch(format!(
                "iterate {:?} vs truth {:?}",
                a0.shape(),
                star.shape()
            )));
        }
    }
    let power = PowerIteration::default();
    let mut drawer = BatchDrawer {
        source,
        resample: cfg.resample,
        per_step: cfg.samples_per_step,
        fresh_cursor: 0,
        owned_pool: None,
    };
    let mut a = a0.clone();
    let mut trace = DescentTrace::default();
    let mut last: Option<Batch> = None;
    for step in 0..cfg.steps {
        let batch = drawer.draw(rng)?;
        let codes = encode_batch(&a, &batch.samples, params)?;
        let consistency = batch.truth.as_deref().map(|t| (codes.as_slice(), t));
        trace.rows.push(trace_row(step, &a, a_star, consistency, &power)?);
        a = step_with_codes(&a, &batch.samples, &codes, cfg.eta, cfg.renormalize)?;
        if !a.frobenius_norm().is_finite() {
            return Err(DescentError::InvalidConfig(format!(
                "iterate diverged at step {step}; eta {} is too large",
                cfg.eta
            )));
        }
        last = Some(batch);
    }
    let final_codes = match &last {
        Some(b) if b.truth.is_some() && a_star.is_some() => Some(encode_batch(&a, &b.samples, params)?),
        _ => None,
    };
    let consistency = match (&final_codes, &last) {
        (Some(c), Some(b)) => b.truth.as_deref().map(|t| (c.as_slice(), t)),
        _ => None,
    };
    trace.rows.push(trace_row(cfg.steps, &a, a_star, consistency, &power)?);
    Ok((a, trace))
}
