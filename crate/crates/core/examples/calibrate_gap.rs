//! Calibrates the gap-test constants on labeled pairs.
//!
//! Draws hold-out pairs with known supports, computes the top two singular
//! values of each pair's weighted covariance, and reports, for a grid of
//! `(c1, c2)`: the false-accept rate (pairs not overlapping in exactly one
//! atom that pass), the share of accepted pairs that are such pairs, and the
//! share of single-overlap pairs accepted.
//!
//! ```text
//! cargo run --release --example calibrate_gap -- [n] [k] [rho] [p2] [pairs] [seed]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsedict::genmodel::{generate_batch, generate_dictionary, generate_full_samples, ModelConfig};
use sparsedict::numerics::{top_singular_pairs, PowerIteration};
use sparsedict::spectral_init::weighted_covariance;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let n: usize = arg(1, 64);
    let k: usize = arg(2, 3);
    let rho: f64 = arg(3, 0.8);
    let p2: usize = arg(4, 30_000);
    let pairs: usize = arg(5, 1000);
    let seed: u64 = arg(6, 1);

    let model = ModelConfig::rademacher(n, n, k, rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_star = generate_dictionary(&model, &mut rng).unwrap();
    let fulls = generate_full_samples(&model, &a_star, 20 * n, &mut rng).unwrap();
    let partials: Vec<_> = generate_batch(&model, &a_star, p2, &mut rng)
        .unwrap()
        .into_iter()
        .map(|(y, _)| y)
        .collect();

    let power = PowerIteration::default();
    let mut labeled = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let u = rng.random_range(0..fulls.len());
        let mut v = rng.random_range(0..fulls.len() - 1);
        if v >= u {
            v += 1;
        }
        let su = &fulls[u].1.reveal().support;
        let sv = &fulls[v].1.reveal().support;
        let shared = su.iter().filter(|i| sv.contains(i)).count();
        let m_hat = weighted_covariance(&fulls[u].0, &fulls[v].0, &partials, rho).unwrap();
        match top_singular_pairs(&m_hat, 2, &power) {
            Ok(sp) => labeled.push((shared, sp[0].value, sp[1].value)),
            Err(e) => eprintln!("pair ({u}, {v}) skipped: {e}"),
        }
    }

    let unique = labeled.iter().filter(|l| l.0 == 1).count();
    println!("n={n} k={k} rho={rho} p2={p2} pairs={} single_overlap={unique}", labeled.len());
    let km = k as f64 / n as f64;
    let ln_n = (n as f64).ln();
    println!("c1,c2,accepted,false_accept_rate,wrong_share_of_accepted,single_overlap_recall");
    for c1 in [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0] {
        for c2 in [1.0, 2.0, 3.0, 4.0, 6.0] {
            if c1 * km <= c2 * km / ln_n {
                continue;
            }
            let acc: Vec<_> = labeled
                .iter()
                .filter(|(_, d1, d2)| *d1 >= c1 * km && *d2 < c2 * km / ln_n)
                .collect();
            let wrong = acc.iter().filter(|l| l.0 != 1).count();
            let hit = acc.len() - wrong;
            let share = if acc.is_empty() { 0.0 } else { wrong as f64 / acc.len() as f64 };
            println!(
                "{c1},{c2},{},{:.4},{:.4},{:.4}",
                acc.len(),
                wrong as f64 / (labeled.len() - unique).max(1) as f64,
                share,
                hit as f64 / unique.max(1) as f64
            );
        }
    }
}
