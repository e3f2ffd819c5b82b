// Independent reference computations used only by tests. Nothing here
// depends on the library, so each check compares two separate routes.
#![allow(dead_code)]

/// Eigenvalues of a symmetric `n x n` row-major matrix by cyclic Jacobi
/// rotations.
pub fn jacobi_eigenvalues_raw(n: usize, entries: &[f64]) -> Vec<f64> {
    assert_eq!(entries.len(), n * n);
    let mut a = entries.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
        }
        let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Singular values of a `rows x cols` row-major matrix, descending, padded
/// with exact zeros to length `rows`. Uses the Jacobi eigenvalues of the
/// smaller of `m mᵀ` and `mᵀ m`.
pub fn jacobi_singular_values_raw(rows: usize, cols: usize, entries: &[f64]) -> Vec<f64> {
    let d = rows.min(cols);
    let at = |i: usize, l: usize| -> f64 {
        if rows <= cols {
            entries[i * cols + l]
        } else {
            entries[l * cols + i]
        }
    };
    let inner = rows.max(cols);
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for l in 0..inner {
                s += at(i, l) * at(j, l);
            }
            gram[i * d + j] = s;
        }
    }
    let mut ev: Vec<f64> = jacobi_eigenvalues_raw(d, &gram)
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev.resize(rows, 0.0);
    ev
}

/// All permutations of `0..m`.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Minimum total squared column distance between `est` and `truth` (both
/// given as column lists) over every permutation and every sign vector,
/// enumerated explicitly.
pub fn brute_force_alignment_cost(est: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    let m = truth.len();
    let sq = |a: &[f64], b: &[f64], s: f64| -> f64 {
        a.iter().zip(b).map(|(x, y)| (s * x - y) * (s * x - y)).sum()
    };
    let mut best = f64::INFINITY;
    for perm in permutations(m) {
        for signs in 0..(1u32 << m) {
            let mut total = 0.0;
            for i in 0..m {
                let s = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
                total += sq(&est[perm[i]], &truth[i], s);
                if total >= best {
                    break;
                }
            }
            best = best.min(total);
        }
    }
    best
}

/// Expected per-sample column of the update when supports are recovered
/// exactly with full observation: the leading term `p q (λ a_i − a*_i)`.
/// Columns are given as lists; `q` is `P[i ∈ S]`, `p` is `E|x_i|`.
pub fn leading_gradient_term(a: &[Vec<f64>], a_star: &[Vec<f64>], p: f64, q: f64, rho: f64) -> Vec<Vec<f64>> {
    a.iter()
        .zip(a_star)
        .map(|(ai, si)| {
            let lambda: f64 = ai.iter().zip(si).map(|(x, y)| x * y).sum();
            ai.iter()
                .zip(si)
                .map(|(x, y)| rho * p * q * (lambda * x - y))
                .collect()
        })
        .collect()
}

/// Mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
