//! Synthetic data: Gaussian ground-truth dictionaries, k-sparse codes,
//! and Bernoulli-masked partial observations `y = P_Γ(A* x*)`.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{dot, norm2, Matrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed dataset: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeDistribution {
    /// Nonzeros are ±1 with equal probability.
    Rademacher,
    /// Nonzero magnitudes uniform on `[C, 2C]` with a random sign.
    /// The second moment is `7C²/3`; no rescaling to unit variance is applied.
    UniformGap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub rho: f64,
    pub code_dist: CodeDistribution,
    /// Lower bound on the magnitude of every nonzero code entry.
    pub c: f64,
}

impl ModelConfig {
    /// Rademacher-coded model (`C = 1`).
    pub fn rademacher(n: usize, m: usize, k: usize, rho: f64) -> Self {
        ModelConfig {
            n,
            m,
            k,
            rho,
            code_dist: CodeDistribution::Rademacher,
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.n == 0 || self.m == 0 {
            return bad(format!("n={} and m={} must be positive", self.n, self.m));
        }
        if self.k == 0 || self.k > self.m {
            return bad(format!("need 1 <= k <= m, got k={} m={}", self.k, self.m));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if self.code_dist == CodeDistribution::Rademacher && self.c != 1.0 {
            return bad(format!("rademacher codes imply C = 1, got {}", self.c));
        }
        Ok(())
    }

    /// `1/ρ − 1 ≤ k`, the coupling under which initialization is analysed.
    pub fn within_init_regime(&self) -> bool {
        1.0 / self.rho - 1.0 <= self.k as f64
    }

    /// `E[x_i²]` for a nonzero code entry.
    pub fn code_second_moment(&self) -> f64 {
        match self.code_dist {
            CodeDistribution::Rademacher => 1.0,
            CodeDistribution::UniformGap => 7.0 * self.c * self.c / 3.0,
        }
    }
}

/// A k-sparse code: sorted support plus the dense length-m value vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCode {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseCode {
    pub fn from_dense(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        SparseCode { support, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Elementwise sign with `sgn(0) = 0`.
    pub fn signs(&self) -> Vec<f64> {
        self.values.iter().map(|v| sign(*v)).collect()
    }
}

pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// An observed sample: sorted index set Γ and a length-n vector that is
/// exactly zero off Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSample {
    pub observed: Vec<usize>,
    pub values: Vec<f64>,
}

impl PartialSample {
    /// Wraps a fully observed vector.
    pub fn full(values: Vec<f64>) -> Self {
        PartialSample {
            observed: (0..values.len()).collect(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Applies `P_Γ` to an arbitrary length-n vector using this sample's Γ.
    pub fn mask(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for &i in &self.observed {
            out[i] = v[i];
        }
        out
    }
}

/// Ground-truth data kept only for evaluation. Learners take
/// `PartialSample`s; the wrapper keeps codes from flowing into them by
/// accident.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<T>(T);

impl<T> GroundTruth<T> {
    pub fn new(value: T) -> Self {
        GroundTruth(value)
    }

    pub fn reveal(&self) -> &T {
        &self.0
    }
}

/// `n x m` dictionary with i.i.d. standard normal entries and unit-norm
/// columns.
pub fn generate_dictionary<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<Matrix, ModelError> {
    cfg.validate()?;
    let mut a = Matrix::random_normal(cfg.n, cfg.m, rng);
    a.normalize_columns();
    Ok(a)
}

pub fn generate_code<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> SparseCode {
    let mut support = index::sample(rng, cfg.m, cfg.k).into_vec();
    support.sort_unstable();
    let mut values = vec![0.0; cfg.m];
    for &i in &support {
        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mag = match cfg.code_dist {
            CodeDistribution::Rademacher => 1.0,
            CodeDistribution::UniformGap => rng.random_range(cfg.c..=2.0 * cfg.c),
        };
        values[i] = s * mag;
    }
    SparseCode { support, values }
}

/// `A* x*`
pub fn synthesize_full(a_star: &Matrix, code: &SparseCode) -> Result<Vec<f64>, ModelError> {
    if a_star.cols() != code.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "dictionary has {} columns, code has length {}",
            a_star.cols(),
            code.len()
        )));
    }
    let mut y = vec![0.0; a_star.rows()];
    for (yi, row) in y.iter_mut().zip(a_star.as_slice().chunks_exact(a_star.cols())) {
        *yi = code.support.iter().map(|&j| row[j] * code.values[j]).sum();
    }
    Ok(y)
}

/// Keeps each coordinate independently with probability `rho`.
pub fn subsample<R: Rng + ?Sized>(full: &[f64], rho: f64, rng: &mut R) -> PartialSample {
    assert!(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    let mut observed = Vec::new();
    let mut values = vec![0.0; full.len()];
    for (i, v) in full.iter().enumerate() {
        if rng.random::<f64>() < rho {
            observed.push(i);
            values[i] = *v;
        }
    }
    PartialSample { observed, values }
}

/// `p` independent partial samples with their (evaluation-only) codes.
pub fn generate_batch<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    a_star: &Matrix,
    p: usize,
    rng: &mut R,
) -> Result<Vec<(PartialSample, GroundTruth<SparseCode>)>, ModelError> {
    cfg.validate()?;
    if a_star.shape() != (cfg.n, cfg.m) {
        return Err(ModelError::DimensionMismatch(format!(
            "dictionary is {:?}, model wants {}x{}",
            a_star.shape(),
            cfg.n,
            cfg.m
        )));
    }
    (0..p)
        .map(|_| {
            let code = generate_code(cfg, rng);
            let full = synthesize_full(a_star, &code)?;
            Ok((subsample(&full, cfg.rho, rng), GroundTruth::new(code)))
        })
        .collect()
}

/// Fully observed samples `A* x*`, as used for the initialization hold-out.
pub fn generate_full_samples<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    a_star: &Matrix,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, GroundTruth<SparseCode>)>, ModelError> {
    cfg.validate()?;
    (0..count)
        .map(|_| {
            let code = generate_code(cfg, rng);
            Ok((synthesize_full(a_star, &code)?, GroundTruth::new(code)))
        })
        .collect()
}

/// Standard normal draw; re-exported for callers building perturbations.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `n x n` dictionary with orthonormal columns (Gram–Schmidt on a Gaussian
/// matrix, re-orthogonalized once).
pub fn orthonormal_dictionary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let g = Matrix::random_normal(n, n, rng);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for mut v in g.columns() {
        for _ in 0..2 {
            for q in &cols {
                let d = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        cols.push(v);
    }
    Matrix::from_columns(&cols).expect("finite columns")
}

/// Rotates every column of `a_star` by a random orthogonal direction so
/// that it stays unit norm and sits exactly `delta` away from the original.
pub fn perturb_dictionary<R: Rng + ?Sized>(a_star: &Matrix, delta: f64, rng: &mut R) -> Result<Matrix, ModelError> {
    if !(0.0..=2.0).contains(&delta) {
        return Err(ModelError::InvalidConfig(format!("delta must lie in [0, 2], got {delta}")));
    }
    if a_star.rows() < 2 && delta > 0.0 {
        return Err(ModelError::InvalidConfig("need n >= 2 to perturb".into()));
    }
    // ‖cos θ a + sin θ w − a‖ = 2 sin(θ/2)
    let theta = 2.0 * (delta / 2.0).asin();
    let mut out = a_star.clone();
    for j in 0..a_star.cols() {
        let a = a_star.column(j);
        let na = norm2(&a);
        let a: Vec<f64> = a.iter().map(|x| x / na).collect();
        let w = loop {
            let mut w: Vec<f64> = (0..a.len()).map(|_| standard_normal(rng)).collect();
            let d = dot(&w, &a);
            w.iter_mut().zip(&a).for_each(|(x, y)| *x -= d * y);
            let nw = norm2(&w);
            if nw > 1e-8 {
                w.iter_mut().for_each(|x| *x /= nw);
                break w;
            }
        };
        let col: Vec<f64> = a.iter().zip(&w).map(|(x, y)| theta.cos() * x + theta.sin() * y).collect();
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Writes the dataset dump: header `n m k rho p`, then per sample a line of
/// Γ indices and a line of the observed values in Γ order.
pub fn write_dataset<W: Write>(
    mut w: W,
    cfg: &ModelConfig,
    samples: &[PartialSample],
) -> Result<(), ModelError> {
    writeln!(w, "{} {} {} {} {}", cfg.n, cfg.m, cfg.k, cfg.rho, samples.len())?;
    for s in samples {
        let idx: Vec<String> = s.observed.iter().map(usize::to_string).collect();
        writeln!(w, "{}", idx.join(" "))?;
        let vals: Vec<String> = s.observed.iter().map(|&i| format!("{:.16e}", s.values[i])).collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    Ok(())
}

/// Header fields of a dataset dump.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetHeader {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub rho: f64,
    pub p: usize,
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Vec<PartialSample>), ModelError> {
    let parse_err = |msg: String| ModelError::Parse(msg);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("empty input".into()))??;
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 5 {
        return Err(parse_err(format!("header needs 5 fields: {header:?}")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(format!("{s:?}: {e}")));
    let head = DatasetHeader {
        n: num(f[0])?,
        m: num(f[1])?,
        k: num(f[2])?,
        rho: f[3].parse().map_err(|e| parse_err(format!("{:?}: {e}", f[3])))?,
        p: num(f[4])?,
    };
    let mut samples = Vec::with_capacity(head.p);
    for s in 0..head.p {
        let idx_line = lines
            .next()
            .ok_or_else(|| parse_err(format!("sample {s}: missing index line")))??;
        let val_line = lines
            .next()
            .ok_or_else(|| parse_err(format!("sample {s}: missing value line")))??;
        let observed: Vec<usize> = idx_line
            .split_whitespace()
            .map(num)
            .collect::<Result<_, _>>()?;
        let vals: Vec<f64> = val_line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != observed.len() {
            return Err(parse_err(format!("sample {s}: {} indices but {} values", observed.len(), vals.len())));
        }
        if observed.windows(2).any(|w| w[0] >= w[1]) || observed.last().is_some_and(|&i| i >= head.n) {
            return Err(parse_err(format!("sample {s}: indices must be sorted, unique and < n")));
        }
        let mut values = vec![0.0; head.n];
        for (&i, v) in observed.iter().zip(vals) {
            values[i] = v;
        }
        samples.push(PartialSample { observed, values });
    }
    Ok((head, samples))
}
