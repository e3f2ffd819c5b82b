//! Dictionary learning from incompletely observed samples.
//!
//! Samples `y = P_Γ(A* x*)` reveal a random subset `Γ` of the coordinates
//! of a sparse combination of dictionary columns. The crate provides
//!
//! - [`genmodel`]: the synthetic generative model,
//! - [`spectral_init`]: a re-weighted spectral initializer,
//! - [`descent`]: thresholding encoder plus sign-gradient descent,
//! - [`evaluation`]: permutation/sign matching and recovery metrics,
//! - [`harness`]: Monte Carlo sweeps over sample count and observation rate.

pub mod descent;
pub mod evaluation;
pub mod genmodel;
pub mod harness;
pub mod numerics;
pub mod par;
pub mod spectral_init;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod testing;

pub use numerics::Matrix;
