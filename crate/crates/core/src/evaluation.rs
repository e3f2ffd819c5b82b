//! Ground-truth comparison modulo column permutation and sign, plus audits
//! of the dictionary properties the recovery guarantees lean on.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::numerics::{dot, spectral_norm, Matrix, NumericsError, PowerIteration};
use crate::par;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {0} is zero")]
    ZeroColumn(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Optimal alignment of an estimate against the ground truth.
///
/// Column `i` of the truth is matched with column `permutation[i]` of the
/// estimate, multiplied by `signs[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub permutation: Vec<usize>,
    pub signs: Vec<f64>,
    pub per_column_err: Vec<f64>,
    /// Sum of squared per-column errors (the assignment objective).
    pub total_cost: f64,
    pub frob_err: f64,
    pub max_err: f64,
}

impl MatchResult {
    /// The estimate with columns permuted and sign-flipped onto the truth.
    pub fn align(&self, a_hat: &Matrix) -> Matrix {
        let mut out = a_hat.select_columns(&self.permutation);
        for i in 0..out.rows() {
            for (v, s) in out.row_mut(i).iter_mut().zip(&self.signs) {
                *v *= s;
            }
        }
        out
    }
}

/// Minimum-cost perfect matching on a square cost matrix (row `i` is
/// assigned column `result[i]`). Shortest augmenting paths with potentials,
/// O(n³).
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based potentials; column 0 is a virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

fn squared_distances(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    (minus, plus)
}

/// Aligns `a_hat` to `a_star` by the assignment minimising the total
/// squared column distance, each pair taking whichever sign is closer
/// (ties go to +1).
pub fn hungarian_match(a_hat: &Matrix, a_star: &Matrix) -> Result<MatchResult, EvalError> {
    if a_hat.shape() != a_star.shape() {
        return Err(EvalError::DimensionMismatch(format!(
            "estimate {:?} vs truth {:?}",
            a_hat.shape(),
            a_star.shape()
        )));
    }
    let m = a_star.cols();
    let est = a_hat.columns();
    let truth = a_star.columns();
    let pairs: Vec<Vec<(f64, f64)>> = par::map(&truth, |t| {
        est.iter().map(|e| squared_distances(e, t)).collect()
    });
    let cost: Vec<Vec<f64>> = pairs
        .iter()
        .map(|row| row.iter().map(|(mi, pl)| mi.min(*pl)).collect())
        .collect();
    let permutation = solve_assignment(&cost);
    let mut signs = Vec::with_capacity(m);
    let mut per_column_err = Vec::with_capacity(m);
    let mut total_cost = 0.0;
    for (i, &j) in permutation.iter().enumerate() {
        let (minus, plus) = pairs[i][j];
        signs.push(if minus <= plus { 1.0 } else { -1.0 });
        total_cost += cost[i][j];
        per_column_err.push(cost[i][j].sqrt());
    }
    let frob_err = total_cost.sqrt();
    let max_err = per_column_err.iter().fold(0.0_f64, |a, b| a.max(*b));
    Ok(MatchResult {
        permutation,
        signs,
        per_column_err,
        total_cost,
        frob_err,
        max_err,
    })
}

/// `frob_err < tau`. The boundary counts as failure.
pub fn recovery_success(result: &MatchResult, tau: f64) -> bool {
    result.frob_err < tau
}

/// `√n · max_{i≠j} |⟨a_i, a_j⟩| / (‖a_i‖‖a_j‖)`.
pub fn incoherence(a: &Matrix) -> Result<f64, EvalError> {
    coherence_scaled(a, (a.rows() as f64).sqrt())
}

fn coherence_scaled(a: &Matrix, scale: f64) -> Result<f64, EvalError> {
    let cols = a.columns();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    if let Some(j) = norms.iter().position(|n| *n == 0.0) {
        return Err(EvalError::ZeroColumn(j));
    }
    let mut worst = 0.0_f64;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            let c = dot(&cols[i], &cols[j]).abs() / (norms[i] * norms[j]);
            worst = worst.max(c);
        }
    }
    Ok(scale * worst)
}

/// Randomised democracy audit: the worst incoherence over `trials` random
/// row subsets of size `gamma_size`. A lower bound on the true worst case,
/// not a certificate.
pub fn democracy_check<R: Rng + ?Sized>(
    a: &Matrix,
    trials: usize,
    gamma_size: usize,
    rng: &mut R,
) -> Result<f64, EvalError> {
    let n = a.rows();
    if (gamma_size as f64) < (n as f64).sqrt() || gamma_size > n {
        return Err(EvalError::InvalidArgument(format!(
            "gamma_size {gamma_size} outside [sqrt(n), n] for n = {n}"
        )));
    }
    let subsets: Vec<Vec<usize>> = (0..trials)
        .map(|_| index::sample(rng, n, gamma_size).into_vec())
        .collect();
    let scale = (n as f64).sqrt();
    let results = par::map(&subsets, |rows| {
        let mut restricted = Matrix::zeros(n, a.cols());
        for &r in rows {
            restricted.row_mut(r).copy_from_slice(a.row(r));
        }
        coherence_scaled(&restricted, scale)
    });
    let mut worst = 0.0_f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// `√n · ‖A‖_max`; bounded by a constant for "non-spiky" dictionaries.
pub fn max_norm_constant(a: &Matrix) -> f64 {
    (a.rows() as f64).sqrt() * a.max_abs()
}

/// Column closeness `delta` and spectral ratio `kappa` after optimal
/// alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Nearness {
    pub delta: f64,
    pub kappa: f64,
    pub matching: MatchResult,
}

pub fn nearness(a: &Matrix, a_star: &Matrix, power: &PowerIteration) -> Result<Nearness, EvalError> {
    let matching = hungarian_match(a, a_star)?;
    let diff = matching.align(a).sub(a_star)?;
    let star_norm = spectral_norm(a_star, power)?;
    let kappa = if diff.as_slice().iter().all(|v| *v == 0.0) {
        0.0
    } else {
        spectral_norm(&diff, power)? / star_norm
    };
    Ok(Nearness {
        delta: matching.max_err,
        kappa,
        matching,
    })
}

/// One row of the evaluation report. `mu` and `democracy_mu` audit the
/// estimate, not the truth.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub delta: f64,
    pub kappa: f64,
    pub frob_err: f64,
    pub success: bool,
    pub mu: f64,
    pub democracy_mu: f64,
}

/// Scores `a_hat` against `a_star`. The democracy audit uses `trials`
/// random half-row subsets (at least `⌈√n⌉` rows).
pub fn evaluate<R: Rng + ?Sized>(
    a_hat: &Matrix,
    a_star: &Matrix,
    tau: f64,
    trials: usize,
    rng: &mut R,
) -> Result<EvalReport, EvalError> {
    let near = nearness(a_hat, a_star, &PowerIteration::default())?;
    let n = a_hat.rows();
    let gamma = n.div_ceil(2).max((n as f64).sqrt().ceil() as usize).min(n);
    Ok(EvalReport {
        delta: near.delta,
        kappa: near.kappa,
        frob_err: near.matching.frob_err,
        success: recovery_success(&near.matching, tau),
        mu: incoherence(a_hat)?,
        democracy_mu: democracy_check(a_hat, trials, gamma, rng)?,
    })
}

pub fn write_eval_report<W: std::io::Write>(rows: &[EvalReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "delta,kappa,frob_err,success,mu,democracy_mu")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.delta, r.kappa, r.frob_err, r.success as u8, r.mu, r.democracy_mu
        )?;
    }
    Ok(())
}
