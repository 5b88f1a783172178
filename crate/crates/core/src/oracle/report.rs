//! Randomized verification suites with line-oriented reports.

use std::fmt;

use rand::Rng;

use super::chain::{theorem1_bound_check, LipschitzGaussianChain};
use super::dp::{lemma2_sides, TabularPolicy};
use super::gplus::estimate_gplus;
use crate::env::{FiniteMdp, QuadraticBandit};
use crate::{seeded_rng, Result};

/// One verification trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLine {
    pub index: usize,
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

impl fmt::Display for TrialLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trial={} {} lhs={:.12e} rhs={:.12e} residual={:.3e} pass={}",
            self.index, self.inputs, self.lhs, self.rhs, self.residual, self.pass
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: Vec<TrialLine>,
    pub summary: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.trials.is_empty() && self.trials.iter().all(|t| t.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.trials.iter().map(|t| t.residual).fold(0.0, f64::max)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.trials {
            writeln!(f, "{} {t}", self.name)?;
        }
        write!(
            f,
            "{} {} {}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.summary
        )
    }
}

pub const LEMMA2_TOLERANCE: f64 = 1e-9;

/// Two-policy performance identity on random 4-state/3-action MDPs, γ = 0.9.
pub fn run_lemma2_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = seeded_rng(seed);
    let mut lines = Vec::with_capacity(trials);
    for index in 0..trials {
        let mdp = FiniteMdp::random(4, 3, 0.9, &mut rng)?;
        let mu = TabularPolicy::random_deterministic(4, 3, &mut rng);
        let tilde = TabularPolicy::random_deterministic(4, 3, &mut rng);
        let eps: f64 = rng.random_range(0.01..1.0);
        let pi = TabularPolicy::smoothed(&mu, 3, eps)?;
        let (lhs, rhs) = lemma2_sides(&mdp, &mu, &tilde, &pi)?;
        let residual = (lhs - rhs).abs();
        lines.push(TrialLine {
            index,
            inputs: format!("mu={mu:?} mu_tilde={tilde:?} smoothing={eps:.4}"),
            lhs,
            rhs,
            residual,
            pass: residual < LEMMA2_TOLERANCE,
        });
    }
    let mut report = SuiteReport {
        name: "lemma2",
        trials: lines,
        summary: String::new(),
    };
    report.summary = format!("max_residual={:.3e} tolerance={LEMMA2_TOLERANCE:e}", report.max_residual());
    Ok(report)
}

pub const LEMMA1_SIGMAS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];
pub const LEMMA1_TOLERANCE: f64 = 1e-4;
pub const LEMMA1_OPTIMUM_TOLERANCE: f64 = 1e-6;

/// CAC/DPG ratio on the 1-D bandit with `a* = 1`, `θ = 0`, plus the
/// stationary case `θ = a*` at `σ = 0.01`.
pub fn run_lemma1_suite() -> Result<SuiteReport> {
    let bandit = QuadraticBandit::new(vec![1.0])?;
    let mut lines = Vec::new();
    for e in estimate_gplus(&bandit, 0.0, &LEMMA1_SIGMAS)?.estimates {
        let ratio = e.ratio.unwrap_or(f64::NAN);
        lines.push(TrialLine {
            index: lines.len(),
            inputs: format!("target=1 theta=0 sigma={} ratio={ratio:.6}", e.sigma),
            lhs: e.delta_cac,
            rhs: e.delta_dpg,
            residual: (ratio - ratio.clamp(0.0, 1.0)).abs(),
            pass: e.holds(LEMMA1_TOLERANCE),
        });
    }
    for e in estimate_gplus(&bandit, 1.0, &[0.01])?.estimates {
        lines.push(TrialLine {
            index: lines.len(),
            inputs: format!("target=1 theta=1 sigma={}", e.sigma),
            lhs: e.delta_cac,
            rhs: e.delta_dpg,
            residual: e.delta_cac.abs(),
            pass: e.holds(LEMMA1_OPTIMUM_TOLERANCE),
        });
    }
    Ok(SuiteReport {
        name: "lemma1",
        summary: format!("ratio_tolerance={LEMMA1_TOLERANCE:e} optimum_tolerance={LEMMA1_OPTIMUM_TOLERANCE:e}"),
        trials: lines,
    })
}

/// Random affine `μ`, bounded perturbation `μ̃`, and `σ` drawn inside the
/// bound's precondition on the default chain.
pub fn run_theorem1_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let chain = LipschitzGaussianChain::default();
    let mut rng = seeded_rng(seed);
    let mut lines = Vec::with_capacity(trials);
    for index in 0..trials {
        let (a0, a1): (f64, f64) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
        let mu: Vec<f64> = (0..chain.n_states).map(|j| a0 + a1 * (chain.state(j) - 0.5)).collect();
        let gap: f64 = rng.random_range(0.0..0.4);
        let tilde: Vec<f64> = mu.iter().map(|a| a + gap * rng.random_range(-1.0..=1.0)).collect();
        let sigma: f64 = rng.random_range(0.0..0.5);
        let check = theorem1_bound_check(&chain, &mu, &tilde, sigma)?;
        lines.push(TrialLine {
            index,
            inputs: format!(
                "sigma={sigma:.4} gap={:.4} epsilon={:.4e} lipschitz={:.4e}",
                check.policy_gap, check.epsilon, check.lipschitz
            ),
            lhs: check.lhs,
            rhs: check.rhs,
            residual: (check.lhs - check.rhs).max(0.0),
            pass: check.satisfied,
        });
    }
    let tightest = lines.iter().map(|t| t.lhs / t.rhs).fold(0.0, f64::max);
    Ok(SuiteReport {
        name: "theorem1",
        summary: format!("max_lhs_over_rhs={tightest:.3e}"),
        trials: lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_runs() {
        assert!(run_lemma2_suite(1, 5).unwrap().passed());
        assert!(run_lemma1_suite().unwrap().passed());
        let t = run_theorem1_suite(1, 3).unwrap();
        assert!(t.passed(), "{t}");
        assert_eq!(t.to_string().lines().count(), 4);
    }
}
