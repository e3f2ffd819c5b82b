//! Dense row-major matrices and the handful of kernels the learners need:
//! products, column access, power-iteration singular pairs and the
//! spectral norm.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("power iteration did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence {
        iters: usize,
        residual: f64,
        last_value: f64,
        last_vector: Vec<f64>,
    },
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed matrix text: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Dense real matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::InvalidArgument(format!(
                "empty shape {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::InvalidArgument(
                "non-finite entry".to_string(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::DimensionMismatch(
                "ragged rows".to_string(),
            ));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|col| col.len() != r) {
            return Err(NumericsError::DimensionMismatch(
                "columns of unequal length".to_string(),
            ));
        }
        let mut data = vec![0.0; r * c];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * c + j] = *v;
            }
        }
        Self::from_row_major(r, c, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj;
            }
        }
        m
    }

    /// Matrix with i.i.d. standard normal entries.
    pub fn random_normal<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| StandardNormal.sample(&mut *rng))
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = *v;
        }
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (s, v) in sq.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Rescales every nonzero column to unit ℓ2 norm.
    pub fn normalize_columns(&mut self) {
        let norms = self.column_norms();
        for row in self.data.chunks_exact_mut(self.cols) {
            for (v, n) in row.iter_mut().zip(&norms) {
                if *n > 0.0 {
                    *v /= n;
                }
            }
        }
    }

    /// Copy with the columns reordered: column `j` of the result is column
    /// `order[j]` of `self`.
    pub fn select_columns(&self, order: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, order.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (d, &j) in dst.iter_mut().zip(order) {
                *d = src[j];
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect()
    }

    /// `selfᵀ · y`
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "tmul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, yi) in self.data.chunks_exact(self.cols).zip(y) {
            if *yi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * yi;
                }
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(NumericsError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Writes the debugging/fixture text format: a `rows cols` header then
    /// one whitespace-separated row per line with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        let mut line = String::new();
        for row in self.data.chunks_exact(self.cols) {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                write!(line, "{v:.16e}").expect("write to String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Matrix> {
        let mut lines = r.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(NumericsError::Parse("missing header".into())),
            }
        };
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| NumericsError::Parse(format!("bad header {header:?}: {e}")))?;
        let [rows, cols] = dims[..] else {
            return Err(NumericsError::Parse(format!(
                "header must be `rows cols`, got {header:?}"
            )));
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|e| {
                    NumericsError::Parse(format!("row {seen_rows}: {tok:?}: {e}"))
                })?);
            }
            if data.len() - before != cols {
                return Err(NumericsError::Parse(format!(
                    "row {seen_rows} has {} entries, expected {cols}",
                    data.len() - before
                )));
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(NumericsError::Parse(format!(
                "expected {rows} rows, found {seen_rows}"
            )));
        }
        Matrix::from_row_major(rows, cols, data)
    }

    pub fn from_text(s: &str) -> Result<Matrix> {
        Self::read_text(s.as_bytes())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two vectors.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `min(‖a − b‖, ‖a + b‖)`: distance modulo a sign flip.
pub fn sign_invariant_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    minus.min(plus).sqrt()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(NumericsError::DimensionMismatch(format!(
            "matmul {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (l, &ail) in arow.iter().enumerate() {
            if ail == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(b.row(l)) {
                *o += ail * bv;
            }
        }
    }
    Ok(out)
}

/// A singular value together with its left singular vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Stopping rule and start vector for [`top_singular_pairs`].
#[derive(Clone, Copy, Debug)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iters: usize,
    /// Seeds the deterministic starting vector.
    pub start_seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: 1e-8,
            max_iters: 5000,
            start_seed: 0x5eed_cafe,
        }
    }
}

impl PowerIteration {
    pub fn with_tol(tol: f64, max_iters: usize) -> Self {
        PowerIteration {
            tol,
            max_iters,
            ..Self::default()
        }
    }
}

// Gram eigenvalues below this fraction of the leading one are reported as
// exact zeros (singular values below 1e-7 of the largest).
const NULL_SPACE_RATIO: f64 = 1e-14;

/// Top one or two singular values of `m` with left singular vectors, by
/// power iteration on `m mᵀ`. The second pair is found by deflating the
/// first direction out of the iterate at every step.
///
/// Accuracy of the second pair degrades when the two leading singular
/// values nearly coincide.
pub fn top_singular_pairs(
    m: &Matrix,
    count: usize,
    opts: &PowerIteration,
) -> Result<Vec<SingularPair>> {
    if !(1..=2).contains(&count) {
        return Err(NumericsError::InvalidArgument(format!(
            "count must be 1 or 2, got {count}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(NumericsError::InvalidArgument("tol must be positive".into()));
    }
    if m.data.iter().all(|v| *v == 0.0) {
        return Err(NumericsError::ZeroMatrix);
    }
    let n = m.rows;
    let gram = GramOperator::new(m);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.start_seed);
    let mut found: Vec<SingularPair> = Vec::with_capacity(count);
    let mut lead_eig = 0.0;

    for _ in 0..count {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        project_out(&mut v, &found);
        if normalize(&mut v) == 0.0 || found.len() >= n {
            found.push(SingularPair {
                value: 0.0,
                vector: orthogonal_unit(n, &found),
            });
            continue;
        }
        let mut w = vec![0.0; n];
        let mut lambda = 0.0;
        let mut prev_change = f64::INFINITY;
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for iter in 0..opts.max_iters {
            gram.apply(&v, &mut w);
            project_out(&mut w, &found);
            let new_lambda = dot(&v, &w);
            residual = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - new_lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            let change = (new_lambda - lambda).abs();
            lambda = new_lambda;
            if !found.is_empty() && lambda <= lead_eig * NULL_SPACE_RATIO {
                lambda = 0.0;
                converged = true;
                break;
            }
            std::mem::swap(&mut v, &mut w);
            if normalize(&mut v) == 0.0 {
                lambda = 0.0;
                converged = true;
                break;
            }
            // Either the residual certifies the pair directly, or the
            // Rayleigh quotients are settling geometrically and the summed
            // tail of remaining increments is below tolerance.
            let scale = opts.tol * lambda;
            let ratio = change / prev_change;
            let tail = if change == 0.0 {
                0.0
            } else if ratio < 1.0 {
                change * ratio / (1.0 - ratio)
            } else {
                f64::INFINITY
            };
            prev_change = change;
            if residual <= scale || (iter >= 3 && change <= scale && tail <= 0.1 * scale) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(NumericsError::NonConvergence {
                iters: opts.max_iters,
                residual,
                last_value: lambda.max(0.0).sqrt(),
                last_vector: v,
            });
        }
        if found.is_empty() {
            lead_eig = lambda;
        }
        if lambda == 0.0 {
            found.push(SingularPair {
                value: 0.0,
                vector: orthogonal_unit(n, &found),
            });
        } else {
            found.push(SingularPair {
                value: lambda.max(0.0).sqrt(),
                vector: v,
            });
        }
    }
    Ok(found)
}

/// Largest singular value of `m`.
///
/// Power iteration first; if the leading singular values are too close for
/// it to converge, falls back to a dense symmetric eigensolve of the smaller
/// Gram matrix.
pub fn spectral_norm(m: &Matrix, opts: &PowerIteration) -> Result<f64> {
    match top_singular_pairs(m, 1, opts) {
        Ok(pairs) => Ok(pairs[0].value),
        Err(NumericsError::NonConvergence { .. }) => Ok(dense_spectral_norm(m)),
        Err(e) => Err(e),
    }
}

fn dense_spectral_norm(m: &Matrix) -> f64 {
    let a = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    let gram = if m.rows <= m.cols { &a * a.transpose() } else { a.transpose() * &a };
    let top = nalgebra::SymmetricEigen::new(gram).eigenvalues.max();
    top.max(0.0).sqrt()
}

/// Applies `m mᵀ` without forming it, or via an explicit Gram matrix when
/// that is cheaper.
struct GramOperator<'a> {
    m: &'a Matrix,
    explicit: Option<Matrix>,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl<'a> GramOperator<'a> {
    fn new(m: &'a Matrix) -> Self {
        // Forming m mᵀ costs rows²·cols once; each implicit apply costs
        // 2·rows·cols. Worth it for wide matrices iterated many times.
        let explicit = if m.cols > 2 * m.rows {
            let mut g = Matrix::zeros(m.rows, m.rows);
            for i in 0..m.rows {
                for j in i..m.rows {
                    let v = dot(m.row(i), m.row(j));
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            Some(g)
        } else {
            None
        };
        GramOperator {
            m,
            explicit,
            scratch: std::cell::RefCell::new(vec![0.0; m.cols]),
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        if let Some(g) = &self.explicit {
            for (o, row) in out.iter_mut().zip(g.data.chunks_exact(g.cols)) {
                *o = dot(row, v);
            }
            return;
        }
        let mut t = self.scratch.borrow_mut();
        t.iter_mut().for_each(|x| *x = 0.0);
        for (row, vi) in self.m.data.chunks_exact(self.m.cols).zip(v) {
            if *vi != 0.0 {
                for (tj, a) in t.iter_mut().zip(row) {
                    *tj += a * vi;
                }
            }
        }
        for (o, row) in out.iter_mut().zip(self.m.data.chunks_exact(self.m.cols)) {
            *o = dot(row, &t);
        }
    }
}

fn project_out(v: &mut [f64], basis: &[SingularPair]) {
    for p in basis {
        let c = dot(v, &p.vector);
        for (x, b) in v.iter_mut().zip(&p.vector) {
            *x -= c * b;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// A unit vector orthogonal to every vector in `basis` (Gram–Schmidt over
/// the standard basis).
fn orthogonal_unit(n: usize, basis: &[SingularPair]) -> Vec<f64> {
    for e in 0..n {
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        project_out(&mut v, basis);
        if normalize(&mut v) > 1e-6 {
            return v;
        }
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::jacobi_eigenvalues_raw;
    use rand::Rng;

    fn opts() -> PowerIteration {
        PowerIteration::default()
    }

    #[test]
    fn identity_times_b_is_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = Matrix::random_normal(3, 4, &mut rng);
        assert_eq!(matmul(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn small_hand_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Matrix::random_normal(5, 7, &mut rng);
        let b = Matrix::random_normal(7, 3, &mut rng);
        let c = matmul(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..7 {
                    s += a[(i, l)] * b[(l, j)];
                }
                assert!((c[(i, j)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(
            matmul(&a, &b),
            Err(NumericsError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn diagonal_pairs() {
        let m = Matrix::diag(&[3.0, 2.0, 1.0]);
        let pairs = top_singular_pairs(&m, 2, &opts()).unwrap();
        assert!((pairs[0].value - 3.0).abs() < 1e-9);
        assert!((pairs[1].value - 2.0).abs() < 1e-9);
        assert!((pairs[0].vector[0].abs() - 1.0).abs() < 1e-6);
        assert!((pairs[1].vector[1].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rank_one_second_value_vanishes() {
        let u = [2.0, 0.0, 0.0, 0.0];
        let v = [0.6, 0.8, 0.0];
        let m = Matrix::outer(&u, &v);
        let pairs = top_singular_pairs(&m, 2, &opts()).unwrap();
        assert!((pairs[0].value - 2.0).abs() < 1e-8);
        assert!(pairs[1].value.abs() < 1e-8);
        assert!((norm2(&pairs[1].vector) - 1.0).abs() < 1e-9);
        assert!(dot(&pairs[0].vector, &pairs[1].vector).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let m = Matrix::zeros(3, 3);
        assert!(matches!(
            top_singular_pairs(&m, 1, &opts()),
            Err(NumericsError::ZeroMatrix)
        ));
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let m = Matrix::diag(&[1.0, 0.999_999, 0.5]);
        let err = top_singular_pairs(&m, 1, &PowerIteration::with_tol(1e-12, 3)).unwrap_err();
        match err {
            NumericsError::NonConvergence {
                iters, last_vector, ..
            } => {
                assert_eq!(iters, 3);
                assert_eq!(last_vector.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spectral_norm_survives_clustered_spectrum() {
        let m = Matrix::diag(&[1.0, 0.999_999, 0.5]);
        let norm = spectral_norm(&m, &PowerIteration::with_tol(1e-12, 3)).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = Matrix::random_normal(8, 8, &mut rng);
        let s = b.add(&b.transpose()).unwrap();
        let mut eig = jacobi_eigenvalues_raw(8, s.as_slice());
        eig.iter_mut().for_each(|e| *e = e.abs());
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let pairs = top_singular_pairs(&s, 2, &opts()).unwrap();
        for (p, e) in pairs.iter().zip(&eig) {
            assert!((p.value - e).abs() / e < 1e-8, "{} vs {}", p.value, e);
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm(&Matrix::identity(5), &opts()).unwrap() - 1.0).abs() < 1e-12);
        let mut m = Matrix::zeros(4, 5);
        let u = [1.0, -2.0, 0.0];
        let v = [0.5, 0.5, 0.5, 0.5];
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj;
            }
        }
        let expected = norm2(&u) * norm2(&v);
        assert!((spectral_norm(&m, &opts()).unwrap() - expected).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = Matrix::random_normal(6, 9, &mut rng);
        let gram = matmul(&r.transpose(), &r).unwrap();
        let top = jacobi_eigenvalues_raw(9, gram.as_slice())
            .into_iter()
            .fold(0.0_f64, f64::max)
            .sqrt();
        assert!((spectral_norm(&r, &opts()).unwrap() - top).abs() / top < 1e-8);
    }

    #[test]
    fn text_format_round_trips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Matrix::random_normal(3, 5, &mut rng).scale(rng.random::<f64>() * 1e3);
        let text = m.to_text();
        assert!(text.starts_with("3 5\n"));
        assert_eq!(Matrix::from_text(&text).unwrap(), m);
    }

    #[test]
    fn text_format_rejects_short_rows() {
        assert!(Matrix::from_text("2 2\n1 2\n3\n").is_err());
        assert!(Matrix::from_text("2 2\n1 2\n").is_err());
        assert!(Matrix::from_text("two 2\n").is_err());
    }
}
