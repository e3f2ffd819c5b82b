//! Re-weighted spectral initialization.
//!
//! For a pair `(u, v)` of fully observed samples the matrix
//!
//! ```text
//! M̂ = 1/(p₂ρ⁴) Σ ⟨y,u⟩⟨y,v⟩ y yᵀ
//! ```
//!
//! built from the partial pool has a single dominant direction when the
//! codes of `u` and `v` share exactly one atom. A large first singular value
//! together with a small second one certifies that case, and the top
//! singular vector is kept as a candidate column.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genmodel::{ModelConfig, PartialSample};
use crate::numerics::{distance, dot, spectral_norm, top_singular_pairs, Matrix, NumericsError, PowerIteration, SingularPair};
use crate::par;

/// Default multiplier in `delta1_min = c₁·k/m`.
pub const GAP_C1: f64 = 2.0;
/// Default multiplier in `delta2_max = c₂·k/(m ln n)`.
pub const GAP_C2: f64 = 4.0;
/// Pair trials evaluated per parallel batch. Fixed so results do not depend
/// on the worker count.
const PAIR_BATCH: usize = 16;

#[derive(Debug, Error)]
pub enum InitError {
    #[error("invalid init configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no partial samples")]
    EmptyPartials,
    #[error("pair trials exhausted with {found} of {wanted} columns")]
    Incomplete {
        found: usize,
        wanted: usize,
        list: CandidateList,
        report: Vec<ReportRow>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    /// Fully observed hold-out size.
    pub p1: usize,
    /// Partial samples fed into each covariance; `None` uses the whole pool.
    #[serde(default)]
    pub p2: Option<usize>,
    pub max_pair_trials: usize,
    pub delta1_min: f64,
    pub delta2_max: f64,
    pub dedup_dist: f64,
    /// Projection radius for the assembled estimate.
    pub radius: f64,
}

impl InitConfig {
    /// Thresholds from [`GAP_C1`]/[`GAP_C2`], dedup radius `1/ln n`, and the
    /// ground-truth-free radius from [`default_radius`].
    pub fn for_model(model: &ModelConfig, p1: usize, max_pair_trials: usize) -> Self {
        Self::with_constants(model, p1, max_pair_trials, GAP_C1, GAP_C2)
    }

    pub fn with_constants(model: &ModelConfig, p1: usize, max_pair_trials: usize, c1: f64, c2: f64) -> Self {
        let km = model.k as f64 / model.m as f64;
        let ln_n = (model.n as f64).ln().max(1.0);
        InitConfig {
            p1,
            p2: None,
            max_pair_trials,
            delta1_min: c1 * km,
            delta2_max: c2 * km / ln_n,
            dedup_dist: (1.0 / ln_n).min(1.0),
            radius: default_radius(model.n, model.m),
        }
    }

    pub fn validate(&self) -> Result<(), InitError> {
        let bad = |msg: String| Err(InitError::InvalidConfig(msg));
        if self.p1 < 2 {
            return bad(format!("p1 must be >= 2, got {}", self.p1));
        }
        if self.p2 == Some(0) {
            return bad("p2 must be >= 1".into());
        }
        if !(self.delta2_max > 0.0 && self.delta1_min > self.delta2_max) {
            return bad(format!(
                "need delta1_min > delta2_max > 0, got {} and {}",
                self.delta1_min, self.delta2_max
            ));
        }
        if !(self.dedup_dist > 0.0 && self.dedup_dist < 2.0) {
            return bad(format!("dedup_dist must lie in (0, 2), got {}", self.dedup_dist));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        Ok(())
    }
}

/// `2·(1 + √(m/n))`: twice the typical spectral norm of an `n x m` Gaussian
/// dictionary with unit columns.
pub fn default_radius(n: usize, m: usize) -> f64 {
    2.0 * (1.0 + (m as f64 / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub u_idx: usize,
    pub v_idx: usize,
    pub delta1: f64,
    pub delta2: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateList {
    pub vectors: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Columns in insertion order.
    pub fn to_matrix(&self) -> Option<Matrix> {
        if self.vectors.is_empty() {
            None
        } else {
            Matrix::from_columns(&self.vectors).ok()
        }
    }
}

/// `1/(p₂ρ⁴) Σ ⟨y,u⟩⟨y,v⟩ y yᵀ`. Exactly symmetric.
pub fn weighted_covariance(u: &[f64], v: &[f64], partials: &[PartialSample], rho: f64) -> Result<Matrix, InitError> {
    if partials.is_empty() {
        return Err(InitError::EmptyPartials);
    }
    let n = u.len();
    if v.len() != n {
        return Err(InitError::DimensionMismatch(format!("u has {n} entries, v has {}", v.len())));
    }
    if let Some(bad) = partials.iter().find(|y| y.dim() != n) {
        return Err(InitError::DimensionMismatch(format!("sample of length {} for n = {n}", bad.dim())));
    }
    let pool = DensePool::new(partials);
    Ok(pool.weighted_covariance(u, v, rho))
}

/// Partial samples as zero-filled rows, which is what the covariance loop
/// wants to stream over.
struct DensePool {
    n: usize,
    rows: Vec<f64>,
}

impl DensePool {
    fn new(partials: &[PartialSample]) -> Self {
        let n = partials[0].dim();
        let mut rows = Vec::with_capacity(n * partials.len());
        for y in partials {
            rows.extend_from_slice(&y.values);
        }
        DensePool { n, rows }
    }

    fn len(&self) -> usize {
        self.rows.len() / self.n
    }

    fn weighted_covariance(&self, u: &[f64], v: &[f64], rho: f64) -> Matrix {
        let n = self.n;
        let samples: Vec<&[f64]> = self.rows.chunks(n).collect();
        let upper = par::chunked_reduce(
            &samples,
            |_, chunk| {
                let mut acc = vec![0.0; n * n];
                let weighted: Vec<(f64, &[f64])> = chunk
                    .iter()
                    .map(|y| (dot(y, u) * dot(y, v), *y))
                    .filter(|(w, _)| *w != 0.0)
                    .collect();
                // Four samples per pass over the accumulator.
                let mut quads = weighted.chunks_exact(4);
                for q in &mut quads {
                    let [(w0, y0), (w1, y1), (w2, y2), (w3, y3)] = [q[0], q[1], q[2], q[3]];
                    for a in 0..n {
                        let (c0, c1, c2, c3) = (w0 * y0[a], w1 * y1[a], w2 * y2[a], w3 * y3[a]);
                        let row = &mut acc[a * n + a..(a + 1) * n];
                        for ((((m, b0), b1), b2), b3) in row.iter_mut().zip(&y0[a..]).zip(&y1[a..]).zip(&y2[a..]).zip(&y3[a..]) {
                            *m += c0 * b0 + c1 * b1 + c2 * b2 + c3 * b3;
                        }
                    }
                }
                for &(w, y) in quads.remainder() {
                    for a in 0..n {
                        let c = w * y[a];
                        let row = &mut acc[a * n + a..(a + 1) * n];
                        for (m, yb) in row.iter_mut().zip(&y[a..]) {
                            *m += c * yb;
                        }
                    }
                }
                acc
            },
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
                acc
            },
        )
        .expect("non-empty pool");
        let scale = 1.0 / (self.len() as f64 * rho.powi(4));
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let val = upper[a * n + b] * scale;
                out[a * n + b] = val;
                out[b * n + a] = val;
            }
        }
        Matrix::from_row_major(n, n, out).expect("finite entries")
    }
}

/// `(1/ρ) A*_Γᵀ u` with the rows outside `gamma` zeroed.
pub fn beta_estimate(u: &[f64], a_star: &Matrix, gamma: &[usize], rho: f64) -> Result<Vec<f64>, InitError> {
    if u.len() != a_star.rows() {
        return Err(InitError::DimensionMismatch(format!(
            "u has {} entries for {} rows",
            u.len(),
            a_star.rows()
        )));
    }
    let mut beta = vec![0.0; a_star.cols()];
    for &i in gamma {
        if i >= a_star.rows() {
            return Err(InitError::DimensionMismatch(format!("row index {i} out of range")));
        }
        for (b, a) in beta.iter_mut().zip(a_star.row(i)) {
            *b += a * u[i];
        }
    }
    beta.iter_mut().for_each(|b| *b /= rho);
    Ok(beta)
}

/// `δ1 ≥ delta1_min` and `δ2 < delta2_max`.
pub fn gap_test(pairs: &[SingularPair], cfg: &InitConfig) -> bool {
    match pairs {
        [first, second, ..] => first.value >= cfg.delta1_min && second.value < cfg.delta2_max,
        _ => false,
    }
}

/// Inserts `z` unless it lies within `dist` of a listed vector, either sign.
pub fn dedup_insert(list: &mut CandidateList, z: &[f64], dist: f64, provenance: Provenance) -> bool {
    let neg: Vec<f64> = z.iter().map(|x| -x).collect();
    let clash = list
        .vectors
        .iter()
        .any(|w| distance(z, w) < dist || distance(&neg, w) < dist);
    if clash {
        return false;
    }
    list.vectors.push(z.to_vec());
    list.provenance.push(provenance);
    true
}

/// Scales `a` onto the spectral ball of the given radius when it lies
/// outside.
pub fn project_to_ball(a: &Matrix, radius: f64, tol: f64) -> Result<Matrix, InitError> {
    if !(radius > 0.0) {
        return Err(InitError::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    let norm = match spectral_norm(a, &PowerIteration::with_tol(tol, 20_000)) {
        Ok(s) => s,
        Err(NumericsError::ZeroMatrix) => 0.0,
        Err(e) => return Err(e.into()),
    };
    if norm <= radius {
        Ok(a.clone())
    } else {
        Ok(a.scale(radius / norm))
    }
}

/// One line of the init report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub trial: usize,
    pub u_idx: usize,
    pub v_idx: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub accepted: bool,
    pub list_len: usize,
}

pub fn write_report<W: Write>(rows: &[ReportRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "trial,u_idx,v_idx,delta1,delta2,accepted,list_len")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.trial, r.u_idx, r.v_idx, r.delta1, r.delta2, r.accepted as u8, r.list_len
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct InitOutput {
    /// `None` only when `m = 0`.
    pub a0: Option<Matrix>,
    pub list: CandidateList,
    pub report: Vec<ReportRow>,
}

/// Top two singular pairs of `M̂_{u,v}`, or `None` when the power method
/// does not settle (the trial then counts as rejected).
fn pair_spectrum(pool: &DensePool, u: &[f64], v: &[f64], rho: f64, power: &PowerIteration) -> Option<Vec<SingularPair>> {
    let m_hat = pool.weighted_covariance(u, v, rho);
    match top_singular_pairs(&m_hat, 2, power) {
        Ok(pairs) => Some(pairs),
        Err(NumericsError::ZeroMatrix) => Some(vec![
            SingularPair { value: 0.0, vector: vec![0.0; u.len()] },
            SingularPair { value: 0.0, vector: vec![0.0; u.len()] },
        ]),
        Err(_) => None,
    }
}

/// Collects `m` certified directions from random hold-out pairs and returns
/// the projected estimate.
pub fn run_init<R: Rng + ?Sized>(
    fulls: &[Vec<f64>],
    partials: &[PartialSample],
    cfg: &InitConfig,
    rho: f64,
    m: usize,
    rng: &mut R,
) -> Result<InitOutput, InitError> {
    cfg.validate()?;
    if m == 0 {
        return Ok(InitOutput {
            a0: None,
            list: CandidateList::default(),
            report: Vec::new(),
        });
    }
    if fulls.len() < 2 {
        return Err(InitError::InvalidConfig(format!("need at least 2 full samples, got {}", fulls.len())));
    }
    if partials.is_empty() {
        return Err(InitError::EmptyPartials);
    }
    let n = fulls[0].len();
    if let Some(bad) = fulls.iter().find(|f| f.len() != n) {
        return Err(InitError::DimensionMismatch(format!("full sample of length {} for n = {n}", bad.len())));
    }
    if let Some(bad) = partials.iter().find(|y| y.dim() != n) {
        return Err(InitError::DimensionMismatch(format!("sample of length {} for n = {n}", bad.dim())));
    }
    let used = cfg.p2.map_or(partials.len(), |p2| p2.min(partials.len()));
    let pool = DensePool::new(&partials[..used]);
    let power = PowerIteration::default();

    let mut list = CandidateList::default();
    let mut report = Vec::new();
    let mut trial = 0;
    while list.len() < m && trial < cfg.max_pair_trials {
        let batch = PAIR_BATCH.min(cfg.max_pair_trials - trial);
        let pairs: Vec<(usize, usize)> = (0..batch)
            .map(|_| {
                let u = rng.random_range(0..fulls.len());
                let mut v = rng.random_range(0..fulls.len() - 1);
                if v >= u {
                    v += 1;
                }
                (u, v)
            })
            .collect();
        let spectra = par::map(&pairs, |&(u, v)| pair_spectrum(&pool, &fulls[u], &fulls[v], rho, &power));
        for ((u, v), spectrum) in pairs.into_iter().zip(spectra) {
            if list.len() >= m {
                break;
            }
            let (delta1, delta2, accepted) = match &spectrum {
                Some(sp) => (sp[0].value, sp[1].value, gap_test(sp, cfg)),
                None => (f64::NAN, f64::NAN, false),
            };
            if accepted {
                let z = &spectrum.as_ref().expect("accepted")[0].vector;
                dedup_insert(&mut list, z, cfg.dedup_dist, Provenance { u_idx: u, v_idx: v, delta1, delta2 });
            }
            report.push(ReportRow {
                trial,
                u_idx: u,
                v_idx: v,
                delta1,
                delta2,
                accepted,
                list_len: list.len(),
            });
            trial += 1;
        }
    }
    if list.len() < m {
        return Err(InitError::Incomplete {
            found: list.len(),
            wanted: m,
            list,
            report,
        });
    }
    let a_tilde = list.to_matrix().expect("non-empty list");
    let a0 = project_to_ball(&a_tilde, cfg.radius, 1e-10)?;
    Ok(InitOutput {
        a0: Some(a0),
        list,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel::{generate_code, subsample, synthesize_full, SparseCode};
    use crate::numerics::norm2;
    use crate::testing::jacobi_singular_values_raw;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn cfg_for(n: usize, m: usize, k: usize) -> InitConfig {
        InitConfig::for_model(&ModelConfig::rademacher(n, m, k, 1.0), 10, 100)
    }

    #[test]
    fn zero_partials_give_zero_matrix() {
        let partials = vec![PartialSample::full(vec![0.0; 4]); 3];
        let m = weighted_covariance(&[1.0; 4], &[1.0; 4], &partials, 0.7).unwrap();
        assert!(m.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_sample_is_outer_product() {
        let y = vec![0.5, 0.5, 0.0];
        let u = vec![1.0, 1.0, 0.0];
        let m = weighted_covariance(&u, &u, &[PartialSample::full(y.clone())], 1.0).unwrap();
        assert_eq!(m, Matrix::outer(&y, &y));
    }

    #[test]
    fn covariance_errors() {
        assert!(matches!(weighted_covariance(&[1.0], &[1.0], &[], 1.0), Err(InitError::EmptyPartials)));
        let p = [PartialSample::full(vec![1.0, 2.0])];
        assert!(weighted_covariance(&[1.0], &[1.0], &p, 1.0).is_err());
    }

    #[test]
    fn covariance_is_symmetric_and_scales_with_rho() {
        let mut r = rng(1);
        let partials: Vec<PartialSample> = (0..300)
            .map(|_| {
                let full: Vec<f64> = (0..9).map(|_| r.random_range(-1.0..1.0)).collect();
                subsample(&full, 0.6, &mut r)
            })
            .collect();
        let u: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let v: Vec<f64> = (0..9).map(|i| (i as f64 * 0.3).sin()).collect();
        let m1 = weighted_covariance(&u, &v, &partials, 0.5).unwrap();
        assert_eq!(m1, m1.transpose());
        // Multiplying rho by 2 divides by exactly 16.
        let m2 = weighted_covariance(&u, &v, &partials, 1.0).unwrap();
        assert_eq!(m2, m1.scale(1.0 / 16.0));
    }

    #[test]
    fn beta_recovers_code_for_orthonormal_full_observation() {
        let a = Matrix::identity(5);
        let alpha = vec![0.0, 1.0, -1.0, 0.0, 0.5];
        let gamma: Vec<usize> = (0..5).collect();
        assert_eq!(beta_estimate(&alpha, &a, &gamma, 1.0).unwrap(), alpha);
        assert_eq!(beta_estimate(&[0.0; 5], &a, &gamma, 0.5).unwrap(), vec![0.0; 5]);
        assert!(beta_estimate(&[0.0; 4], &a, &gamma, 1.0).is_err());
    }

    fn sp(value: f64) -> SingularPair {
        SingularPair { value, vector: vec![1.0] }
    }

    #[test]
    fn gap_test_thresholds() {
        let c = cfg_for(64, 64, 3);
        assert!(!gap_test(&[sp(0.0), sp(0.0)], &c));
        assert!(gap_test(&[sp(2.0 * c.delta1_min), sp(c.delta2_max / 2.0)], &c));
        assert!(gap_test(&[sp(c.delta1_min), sp(0.0)], &c));
        assert!(!gap_test(&[sp(c.delta1_min), sp(c.delta2_max)], &c));
        assert!(!gap_test(&[sp(1.0)], &c));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg_for(64, 64, 3);
        assert!(c.validate().is_ok());
        c.p1 = 1;
        assert!(c.validate().is_err());
        let mut c = cfg_for(64, 64, 3);
        c.delta2_max = c.delta1_min;
        assert!(c.validate().is_err());
        let mut c = cfg_for(64, 64, 3);
        c.dedup_dist = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dedup_rules() {
        let mut list = CandidateList::default();
        let prov = || Provenance { u_idx: 0, v_idx: 1, delta1: 1.0, delta2: 0.0 };
        let z = vec![1.0, 0.0, 0.0];
        assert!(dedup_insert(&mut list, &z, 0.25, prov()));
        assert!(!dedup_insert(&mut list, &[-1.0, 0.0, 0.0], 0.25, prov()));
        // Perturb by 0.9·dist orthogonally, renormalize, and compute the chord.
        let mut w = vec![1.0, 0.9 * 0.25, 0.0];
        let nw = norm2(&w);
        w.iter_mut().for_each(|x| *x /= nw);
        let chord = distance(&w, &z);
        assert!(chord < 0.25);
        assert!(!dedup_insert(&mut list, &w, 0.25, prov()));
        assert!(dedup_insert(&mut list, &[0.0, 1.0, 0.0], 0.25, prov()));
        assert_eq!(list.len(), 2);
    }

    proptest! {
        #[test]
        fn dedup_invariant_holds(raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..40), dist in 0.05f64..1.5) {
            let mut list = CandidateList::default();
            for v in raw {
                let nv = norm2(&v);
                if nv < 1e-3 {
                    continue;
                }
                let z: Vec<f64> = v.iter().map(|x| x / nv).collect();
                dedup_insert(&mut list, &z, dist, Provenance { u_idx: 0, v_idx: 1, delta1: 0.0, delta2: 0.0 });
            }
            for i in 0..list.len() {
                for j in 0..i {
                    let (a, b) = (&list.vectors[i], &list.vectors[j]);
                    let nb: Vec<f64> = b.iter().map(|x| -x).collect();
                    prop_assert!(distance(a, b).min(distance(a, &nb)) >= dist);
                }
            }
        }

        #[test]
        fn projection_respects_radius(data in prop::collection::vec(-3.0f64..3.0, 12), radius in 0.1f64..5.0) {
            let a = Matrix::from_row_major(4, 3, data).unwrap();
            let p = project_to_ball(&a, radius, 1e-10).unwrap();
            let sv = jacobi_singular_values_raw(4, 3, p.as_slice());
            prop_assert!(sv[0] <= radius * (1.0 + 1e-8));
            let orig = jacobi_singular_values_raw(4, 3, a.as_slice());
            prop_assert!(sv[0] <= orig[0] * (1.0 + 1e-12));
            let again = project_to_ball(&p, radius, 1e-10).unwrap();
            let sv2 = jacobi_singular_values_raw(4, 3, again.as_slice());
            prop_assert!((sv2[0] - sv[0]).abs() <= 1e-8 * radius);
        }
    }

    #[test]
    fn projection_cases() {
        let a = Matrix::identity(3).scale(0.5);
        assert_eq!(project_to_ball(&a, 1.0, 1e-10).unwrap(), a);
        let b = project_to_ball(&Matrix::identity(3).scale(4.0), 2.0, 1e-10).unwrap();
        assert!(b.sub(&Matrix::identity(3).scale(2.0)).unwrap().max_abs() < 1e-9);
        assert_eq!(project_to_ball(&Matrix::zeros(2, 2), 1.0, 1e-10).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn empty_dictionary_is_vacuous() {
        let out = run_init(&[], &[], &cfg_for(64, 64, 3), 1.0, 0, &mut rng(2)).unwrap();
        assert!(out.a0.is_none());
    }

    #[test]
    fn noiseless_one_sparse_recovers_atoms_exactly() {
        let n = 6;
        let a_star = Matrix::identity(n);
        let model = ModelConfig::rademacher(n, n, 1, 1.0);
        let mut r = rng(3);
        let fulls: Vec<Vec<f64>> = (0..40)
            .map(|_| synthesize_full(&a_star, &generate_code(&model, &mut r)).unwrap())
            .collect();
        let partials: Vec<PartialSample> = (0..400)
            .map(|_| PartialSample::full(synthesize_full(&a_star, &generate_code(&model, &mut r)).unwrap()))
            .collect();
        // Noiseless k = 1 puts δ1 at exactly k/m, so the default c₁ is too strict here.
        let mut cfg = InitConfig::with_constants(&model, 40, 2000, 0.5, 0.5);
        cfg.radius = 10.0;
        let out = run_init(&fulls, &partials, &cfg, 1.0, n, &mut r).unwrap();
        let a0 = out.a0.unwrap();
        for z in a0.columns() {
            let atom = z.iter().position(|x| x.abs() > 0.5).unwrap();
            let mut e = vec![0.0; n];
            e[atom] = z[atom].signum();
            assert!(distance(&z, &e) < 1e-9, "{z:?}");
        }
        for row in &out.report {
            let shared = {
                let su = SparseCode::from_dense(fulls[row.u_idx].clone()).support;
                let sv = SparseCode::from_dense(fulls[row.v_idx].clone()).support;
                su == sv
            };
            assert_eq!(row.accepted, shared);
        }
    }

    #[test]
    fn incomplete_list_is_reported() {
        let n = 6;
        let model = ModelConfig::rademacher(n, n, 1, 1.0);
        let mut r = rng(4);
        let fulls = vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 4];
        let partials = vec![PartialSample::full(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]); 10];
        let cfg = InitConfig::with_constants(&model, 4, 30, 0.5, 0.5);
        match run_init(&fulls, &partials, &cfg, 1.0, n, &mut r) {
            Err(InitError::Incomplete { found, list, report, .. }) => {
                assert_eq!(found, 1);
                assert_eq!(list.len(), 1);
                assert_eq!(report.len(), 30);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn report_csv_header() {
        let mut buf = Vec::new();
        let row = ReportRow { trial: 0, u_idx: 1, v_idx: 2, delta1: 0.5, delta2: 0.1, accepted: true, list_len: 1 };
        write_report(&[row], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,u_idx,v_idx,delta1,delta2,accepted,list_len\n0,1,2,0.5,0.1,1,1\n");
    }
}
