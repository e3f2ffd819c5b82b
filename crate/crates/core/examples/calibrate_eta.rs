//! Sweeps the learning-rate constant `c` in `η = c·m/(ρk)`.
//!
//! Starts every column exactly `delta0` from the truth and runs fresh-sample
//! descent, printing the median per-step error ratio before the floor and
//! the final max column error for both encoders.
//!
//! ```text
//! cargo run --release --example calibrate_eta -- [n] [k] [p] [steps] [seeds]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsedict::descent::{eta_with_scale, run_descent, DescentConfig, Encoder, EncoderParams, Resample, SampleSource};
use sparsedict::genmodel::{generate_dictionary, perturb_dictionary, ModelConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let n: usize = arg(1, 64);
    let k: usize = arg(2, 3);
    let p: usize = arg(3, 4096);
    let steps: usize = arg(4, 25);
    let seeds: u64 = arg(5, 3);
    let delta0 = 0.1;

    println!("encoder,rho,scale,seed,first_ratio,final_max_col_err,min_max_col_err");
    for encoder in [Encoder::TopK, Encoder::Threshold] {
        for rho in [0.8, 1.0] {
            for scale in [0.125, 0.25, 0.5, 1.0] {
                for seed in 0..seeds {
                    let model = ModelConfig::rademacher(n, n, k, rho);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let a_star = generate_dictionary(&model, &mut rng).unwrap();
                    let a0 = perturb_dictionary(&a_star, delta0, &mut rng).unwrap();
                    let cfg = DescentConfig {
                        eta: eta_with_scale(scale, n, k, rho),
                        steps,
                        encoder,
                        samples_per_step: p,
                        resample: Resample::Fresh,
                        renormalize: false,
                    };
                    let params = EncoderParams::from_model(&model, encoder);
                    let source = SampleSource::Model { model: &model, a_star: &a_star };
                    match run_descent(&a0, &cfg, &params, source, Some(&a_star), &mut rng) {
                        Ok((_, trace)) => {
                            let errs = trace.max_col_errors();
                            let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
                            println!(
                                "{encoder:?},{rho},{scale},{seed},{:.4},{:.5},{:.5}",
                                errs[1] / errs[0],
                                errs[steps],
                                min
                            );
                        }
                        Err(e) => println!("{encoder:?},{rho},{scale},{seed},diverged,{e},"),
                    }
                }
            }
        }
    }
}
