//! Deterministic-policy actor-critic toolkit.
//!
//! The crate covers the CACLA family of updates (CACLA, CAC, NFAC and the
//! penalized PeNFAC variant) together with stochastic and deterministic policy
//! gradient baselines, desk-scale environments, and exact dynamic-programming
//! oracles used to check the underlying identities numerically.
//!
//! Module map:
//!
//! - [`nn`]: dense MLP with manual backprop, Adam, batch norm, gradient checks.
//! - [`env`]: environment contract, quadratic bandits, point mass, finite MDPs.
//! - [`policy`]: deterministic policy representations and Gaussian exploration.
//! - [`critic`]: TD errors, λ-returns, fitted value iteration, compatible critics.
//! - [`updates`]: SPG / DPG / CACLA / CAC / PeNFAC update directions.
//! - [`agents`]: full learning loops.
//! - [`oracle`]: exact DP solutions, quadrature, identity and bound checks.
//! - [`harness`]: configuration, seeded experiment runs, verification suites.

pub mod agents;
pub mod critic;
pub mod env;
pub mod harness;
pub mod nn;
pub mod oracle;
pub mod policy;
pub mod stats;
pub mod updates;

mod error;

pub use error::{Error, Result};

/// Seeded RNG used everywhere a reproducible stream is needed.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's standard RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
