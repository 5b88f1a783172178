//! Exact dynamic programming, quadrature, and numerical checks of the
//! performance identities and bounds behind the update rules.

mod chain;
mod dp;
mod gplus;
mod quadrature;
mod report;

pub use chain::{theorem1_bound_check, BoundCheck, LipschitzGaussianChain, StatePolicy};
pub use dp::{
    check_lemma2_identity, dp_solve, lemma2_sides, performance_j, solve_markov_chain, value_iteration, DpSolution, TabularPolicy,
};
pub use gplus::{estimate_gplus, exact_advantage_1d, GplusEstimate, GplusSuite};
pub use quadrature::{adaptive_simpson, gaussian_expectation, QUADRATURE_TOLERANCE, QUADRATURE_WIDTH};
pub use report::{run_lemma1_suite, run_lemma2_suite, run_theorem1_suite, SuiteReport, TrialLine};
