use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparsedict::evaluation::{democracy_check, hungarian_match, incoherence, nearness, recovery_success};
use sparsedict::genmodel::{generate_dictionary, perturb_dictionary, ModelConfig};
use sparsedict::numerics::{spectral_norm, PowerIteration};
use sparsedict::Matrix;

fn gaussian(n: usize, m: usize, seed: u64) -> Matrix {
    Matrix::random_normal(n, m, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn shuffle_and_flip(a: &Matrix, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..a.cols()).collect();
    order.shuffle(&mut rng);
    let mut out = a.select_columns(&order);
    for j in 0..out.cols() {
        if rand::Rng::random_bool(&mut rng, 0.5) {
            let neg: Vec<f64> = out.column(j).iter().map(|v| -v).collect();
            out.set_column(j, &neg);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_ignores_column_order_and_sign(n in 2usize..10, m in 1usize..8, seed in any::<u64>()) {
        let truth = gaussian(n, m, seed);
        let est = gaussian(n, m, seed ^ 0xabcd);
        let base = hungarian_match(&est, &truth).unwrap();
        let moved = hungarian_match(&shuffle_and_flip(&est, seed.wrapping_add(1)), &truth).unwrap();
        prop_assert_eq!(base.total_cost, moved.total_cost);
        prop_assert_eq!(base.frob_err, moved.frob_err);
        prop_assert_eq!(base.per_column_err, moved.per_column_err);
    }

    #[test]
    fn success_is_monotone_in_tau(seed in any::<u64>(), t1 in 1e-3f64..10.0, t2 in 1e-3f64..10.0) {
        let truth = gaussian(6, 4, seed);
        let est = gaussian(6, 4, seed ^ 1);
        let r = hungarian_match(&est, &truth).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(!recovery_success(&r, lo) || recovery_success(&r, hi));
    }

    #[test]
    fn incoherence_ignores_scaling_and_order(seed in any::<u64>(), exps in prop::collection::vec(-8i32..8, 6)) {
        let a = gaussian(9, 6, seed);
        let mut scaled = a.clone();
        for (j, e) in exps.iter().enumerate() {
            let col: Vec<f64> = a.column(j).iter().map(|v| v * 2f64.powi(*e)).collect();
            scaled.set_column(j, &col);
        }
        let base = incoherence(&a).unwrap();
        prop_assert_eq!(base, incoherence(&scaled).unwrap());
        prop_assert_eq!(base, incoherence(&shuffle_and_flip(&a, seed ^ 7)).unwrap());
    }

    #[test]
    fn democracy_is_nonnegative_and_full_subset_is_incoherence(seed in any::<u64>(), g in 3usize..9) {
        let a = gaussian(9, 5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(democracy_check(&a, 10, g, &mut rng).unwrap() >= 0.0);
        prop_assert_eq!(democracy_check(&a, 3, 9, &mut rng).unwrap(), incoherence(&a).unwrap());
    }
}

#[test]
fn kappa_is_bounded_by_column_closeness() {
    let power = PowerIteration::default();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = ModelConfig::rademacher(32, 48, 3, 1.0);
        let a_star = generate_dictionary(&model, &mut rng).unwrap();
        let delta = 0.02 + 0.01 * seed as f64;
        let a = perturb_dictionary(&a_star, delta, &mut rng).unwrap();
        let near = nearness(&a, &a_star, &power).unwrap();
        let bound = near.delta * (a_star.cols() as f64).sqrt() / spectral_norm(&a_star, &power).unwrap();
        assert!(near.kappa <= bound * (1.0 + 1e-9), "seed {seed}: {} > {bound}", near.kappa);
        assert!((near.delta - delta).abs() < 1e-9);
    }
}
