//! A discretized 1-D chain with Gaussian transitions, used to check the
//! deterministic trust-region bound exactly.

use nalgebra::{DMatrix, DVector};

use super::dp::solve_markov_chain;
use crate::error::check_len;
use crate::{Error, Result};

/// One action per grid state.
pub type StatePolicy = Vec<f64>;

/// States are the `n` cell centres of `[0, 1]` (total measure one).
/// `s' ~ N(s + c·a, τ²)` restricted to the grid and renormalized;
/// `R(s, a) = scale·(−(s − ½)² − 0.1·a²)`; uniform start.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzGaussianChain {
    pub n_states: usize,
    pub drift: f64,
    pub tau: f64,
    pub gamma: f64,
    pub reward_scale: f64,
    /// Quadrature nodes used to discretize the Gaussian policy.
    pub policy_nodes: usize,
}

impl Default for LipschitzGaussianChain {
    fn default() -> Self {
        Self {
            n_states: 41,
            drift: 0.3,
            tau: 0.1,
            gamma: 0.9,
            reward_scale: 1.0,
            policy_nodes: 33,
        }
    }
}

/// Actions over which `ε = max |A^π(s, a)|` is taken.
const ACTION_BOX: (f64, f64) = (-1.0, 1.0);
const ACTION_GRID: usize = 201;
/// Policy nodes span `μ ± NODE_WIDTH·σ`.
const NODE_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub epsilon: f64,
    pub lipschitz: f64,
    /// `max_s |μ̃(s) − μ(s)|`.
    pub policy_gap: f64,
    pub satisfied: bool,
}

impl LipschitzGaussianChain {
    pub fn state(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.n_states as f64
    }

    fn cell_width(&self) -> f64 {
        1.0 / self.n_states as f64
    }

    pub fn transition_row(&self, j: usize, action: f64) -> Vec<f64> {
        let centre = self.state(j) + self.drift * action;
        let mut row: Vec<f64> = (0..self.n_states)
            .map(|i| (-(self.state(i) - centre).powi(2) / (2.0 * self.tau * self.tau)).exp())
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|p| *p /= sum);
        } else {
            // far outside the grid: all mass on the nearest edge
            row.iter_mut().for_each(|p| *p = 0.0);
            let edge = if centre < 0.5 { 0 } else { self.n_states - 1 };
            row[edge] = 1.0;
        }
        row
    }

    pub fn reward(&self, j: usize, action: f64) -> f64 {
        self.reward_scale * (-(self.state(j) - 0.5).powi(2) - 0.1 * action * action)
    }

    /// Lipschitz constant in `a` of the next-state density (mass divided by
    /// the cell width). For normalized weights `p_i ∝ exp(−(s_i − s − c·a)²/2τ²)`,
    /// `∂p_i/∂a = p_i(g_i − Σ_k p_k g_k)` with `g_i = c(s_i − s − c·a)/τ²`,
    /// so `|∂p_i/∂a| ≤ c·(s_max − s_min)/τ²`.
    pub fn lipschitz(&self) -> f64 {
        let span = self.state(self.n_states - 1) - self.state(0);
        self.drift * span / (self.tau * self.tau) / self.cell_width()
    }

    fn policy_nodes(&self, sigma: f64) -> Vec<(f64, f64)> {
        if sigma == 0.0 || self.policy_nodes <= 1 {
            return vec![(0.0, 1.0)];
        }
        let k = self.policy_nodes;
        let raw: Vec<(f64, f64)> = (0..k)
            .map(|i| {
                let z = -NODE_WIDTH + 2.0 * NODE_WIDTH * i as f64 / (k - 1) as f64;
                (sigma * z, (-0.5 * z * z).exp())
            })
            .collect();
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        raw.into_iter().map(|(b, w)| (b, w / total)).collect()
    }

    fn initial(&self) -> DVector<f64> {
        DVector::from_element(self.n_states, 1.0 / self.n_states as f64)
    }

    fn solve_deterministic(&self, mu: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.n_states;
        let mut p = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for j in 0..n {
            for (i, prob) in self.transition_row(j, mu[j]).into_iter().enumerate() {
                p[(j, i)] = prob;
            }
            r[j] = self.reward(j, mu[j]);
        }
        solve_markov_chain(&p, &r, &self.initial(), self.gamma)
    }

    /// `(V^π, d^π)` for the discretized Gaussian policy around `mu`.
    pub fn solve_gaussian(&self, mu: &[f64], sigma: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        check_len("chain policy", self.n_states, mu.len())?;
        let n = self.n_states;
        let nodes = self.policy_nodes(sigma);
        let mut p = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for j in 0..n {
            for &(offset, w) in &nodes {
                let a = mu[j] + offset;
                for (i, prob) in self.transition_row(j, a).into_iter().enumerate() {
                    p[(j, i)] += w * prob;
                }
                r[j] += w * self.reward(j, a);
            }
        }
        solve_markov_chain(&p, &r, &self.initial(), self.gamma)
    }

    fn advantage(&self, v: &DVector<f64>, j: usize, action: f64) -> f64 {
        let next: f64 = self.transition_row(j, action).iter().zip(v.iter()).map(|(p, x)| p * x).sum();
        self.reward(j, action) + self.gamma * next - v[j]
    }
}

/// Compares `|Σ_s (d^{μ̃}(s) − d^π(s))·A^π(s, μ̃(s))|` with
/// `εL/(1−γ)·(max_s|μ̃(s) − μ(s)| + 2σ/√(2π))` (one action dimension).
pub fn theorem1_bound_check(
    chain: &LipschitzGaussianChain,
    mu: &[f64],
    mu_tilde: &[f64],
    sigma: f64,
) -> Result<BoundCheck> {
    check_len("μ", chain.n_states, mu.len())?;
    check_len("μ̃", chain.n_states, mu_tilde.len())?;
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("σ must be non-negative, got {sigma}")));
    }
    if mu.iter().chain(mu_tilde).any(|a| !(ACTION_BOX.0..=ACTION_BOX.1).contains(a)) {
        return Err(Error::invalid("policies must act inside [-1, 1]"));
    }
    let policy_gap = mu.iter().zip(mu_tilde).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let spread = policy_gap + 2.0 * sigma / (2.0 * std::f64::consts::PI).sqrt();
    if spread >= 1.0 {
        return Err(Error::invalid(format!(
            "bound precondition violated: gap + 2σ/√(2π) = {spread} ≥ 1"
        )));
    }
    let (v_pi, d_pi) = chain.solve_gaussian(mu, sigma)?;
    let (_, d_tilde) = chain.solve_deterministic(mu_tilde)?;
    let lhs = (0..chain.n_states)
        .map(|j| (d_tilde[j] - d_pi[j]) * chain.advantage(&v_pi, j, mu_tilde[j]))
        .sum::<f64>()
        .abs();
    let mut epsilon: f64 = 0.0;
    for j in 0..chain.n_states {
        for k in 0..ACTION_GRID {
            let a = ACTION_BOX.0 + (ACTION_BOX.1 - ACTION_BOX.0) * k as f64 / (ACTION_GRID - 1) as f64;
            epsilon = epsilon.max(chain.advantage(&v_pi, j, a).abs());
        }
        epsilon = epsilon.max(chain.advantage(&v_pi, j, mu_tilde[j]).abs());
    }
    let lipschitz = chain.lipschitz();
    let rhs = epsilon * lipschitz / (1.0 - chain.gamma) * spread;
    Ok(BoundCheck {
        lhs,
        rhs,
        epsilon,
        lipschitz,
        policy_gap,
        satisfied: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    #[test]
    fn rows_are_stochastic_and_lipschitz() {
        let chain = LipschitzGaussianChain::default();
        let mut rng = seeded_rng(17);
        let width = 1.0 / chain.n_states as f64;
        for _ in 0..200 {
            let j = rng.random_range(0..chain.n_states);
            let a1: f64 = rng.random_range(-1.0..1.0);
            let a2: f64 = rng.random_range(-1.0..1.0);
            let (r1, r2) = (chain.transition_row(j, a1), chain.transition_row(j, a2));
            assert!((r1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (p, q) in r1.iter().zip(&r2) {
                assert!((p - q).abs() / width <= chain.lipschitz() * (a1 - a2).abs() + 1e-12);
            }
        }
    }

    #[test]
    fn identical_policies_without_noise() {
        let chain = LipschitzGaussianChain::default();
        let mu: Vec<f64> = (0..chain.n_states).map(|j| 0.2 - 0.4 * chain.state(j)).collect();
        let check = theorem1_bound_check(&chain, &mu, &mu, 0.0).unwrap();
        assert!(check.lhs < 1e-10);
        assert_eq!(check.rhs, 0.0);
        assert!(check.lhs <= check.rhs + 1e-10);
    }

    #[test]
    fn reward_scaling_is_homogeneous() {
        let chain = LipschitzGaussianChain::default();
        let doubled = LipschitzGaussianChain {
            reward_scale: 2.0,
            ..chain.clone()
        };
        let mu: Vec<f64> = (0..chain.n_states).map(|j| 0.3 * chain.state(j)).collect();
        let tilde: Vec<f64> = mu.iter().map(|a| a - 0.2).collect();
        let a = theorem1_bound_check(&chain, &mu, &tilde, 0.1).unwrap();
        let b = theorem1_bound_check(&doubled, &mu, &tilde, 0.1).unwrap();
        assert!((b.lhs - 2.0 * a.lhs).abs() < 1e-10 * a.lhs.max(1.0));
        assert!((b.rhs - 2.0 * a.rhs).abs() < 1e-10 * a.rhs);
        assert_eq!(a.satisfied, b.satisfied);
    }

    #[test]
    fn precondition_enforced() {
        let chain = LipschitzGaussianChain::default();
        let mu = vec![-0.5; chain.n_states];
        let tilde = vec![0.5; chain.n_states];
        assert!(theorem1_bound_check(&chain, &mu, &tilde, 0.1).is_err());
    }
}
