//! Exact policy evaluation on finite MDPs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::env::FiniteMdp;
use crate::error::check_len;
use crate::{Error, Result};

/// Stochastic tabular policy `π(a|s)`, row-major `[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        check_len("tabular policy", n_states * n_actions, probs.len())?;
        for row in probs.chunks(n_actions) {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("policy rows must be probability vectors"));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        Self::smoothed(actions, n_actions, 0.0)
    }

    /// `(1−ε)·1[a = μ(s)] + ε/k`.
    pub fn smoothed(actions: &[usize], n_actions: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("smoothing {epsilon} outside [0, 1]")));
        }
        let mut probs = vec![epsilon / n_actions as f64; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::invalid(format!("action {a} out of range")));
            }
            probs[s * n_actions + a] += 1.0 - epsilon;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn random_deterministic<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Vec<usize> {
        (0..n_states).map(|_| rng.random_range(0..n_actions)).collect()
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub v: Vec<f64>,
    /// `[s][a]`.
    pub q: Vec<Vec<f64>>,
    pub advantage: Vec<Vec<f64>>,
    /// Unnormalized discounted occupancy; sums to `1/(1−γ)`.
    pub discounted_states: Vec<f64>,
    pub performance: f64,
}

/// Solves `(I − γP)V = R` and `(I − γPᵀ)d = T0` for a Markov chain.
pub fn solve_markov_chain(
    transitions: &DMatrix<f64>,
    rewards: &DVector<f64>,
    initial: &DVector<f64>,
    gamma: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = transitions.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let lhs = &identity - transitions * gamma;
    let v = lhs.clone().lu().solve(rewards).ok_or(Error::Singular)?;
    let d = lhs.transpose().lu().solve(initial).ok_or(Error::Singular)?;
    Ok((v, d))
}

fn check_shapes(mdp: &FiniteMdp, policy: &TabularPolicy) -> Result<()> {
    check_len("policy states", mdp.n_states(), policy.n_states())?;
    check_len("policy actions", mdp.n_actions(), policy.n_actions())
}

pub fn dp_solve(mdp: &FiniteMdp, policy: &TabularPolicy) -> Result<DpSolution> {
    check_shapes(mdp, policy)?;
    let (n, k, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        for a in 0..k {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r[s] += w * mdp.reward(s, a);
            for (s2, prob) in mdp.transition_row(s, a).iter().enumerate() {
                p[(s, s2)] += w * prob;
            }
        }
    }
    let initial = DVector::from_column_slice(mdp.initial());
    let (v, d) = solve_markov_chain(&p, &r, &initial, gamma)?;
    let q: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..k)
                .map(|a| {
                    let next: f64 = mdp.transition_row(s, a).iter().zip(v.iter()).map(|(p, v)| p * v).sum();
                    mdp.reward(s, a) + gamma * next
                })
                .collect()
        })
        .collect();
    let advantage = q
        .iter()
        .zip(v.iter())
        .map(|(row, vs)| row.iter().map(|qa| qa - vs).collect())
        .collect();
    let performance = initial.dot(&v);
    Ok(DpSolution {
        v: v.as_slice().to_vec(),
        q,
        advantage,
        discounted_states: d.as_slice().to_vec(),
        performance,
    })
}

/// `J(π) = Σ_s T0(s)·V^π(s)`.
pub fn performance_j(mdp: &FiniteMdp, policy: &TabularPolicy) -> Result<f64> {
    Ok(dp_solve(mdp, policy)?.performance)
}

/// `sweeps` synchronous Bellman expectation backups from `V = 0`.
pub fn value_iteration(mdp: &FiniteMdp, policy: &TabularPolicy, sweeps: usize) -> Result<Vec<f64>> {
    check_shapes(mdp, policy)?;
    let (n, k, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut v = vec![0.0; n];
    for _ in 0..sweeps {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                (0..k)
                    .map(|a| {
                        let ev: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                        policy.prob(s, a) * (mdp.reward(s, a) + gamma * ev)
                    })
                    .sum()
            })
            .collect();
        v = next;
    }
    Ok(v)
}

/// Residual of `J(μ̃) = J(μ) + Σ_s d^π(s) Σ_a π(a|s) A^μ(s,a) + Σ_s d^{μ̃}(s) A^π(s, μ̃(s))`.
pub fn check_lemma2_identity(
    mdp: &FiniteMdp,
    mu: &[usize],
    mu_tilde: &[usize],
    pi: &TabularPolicy,
) -> Result<f64> {
    let (lhs, rhs) = lemma2_sides(mdp, mu, mu_tilde, pi)?;
    Ok((lhs - rhs).abs())
}

/// Both sides of the identity checked by [`check_lemma2_identity`].
pub fn lemma2_sides(mdp: &FiniteMdp, mu: &[usize], mu_tilde: &[usize], pi: &TabularPolicy) -> Result<(f64, f64)> {
    check_len("μ", mdp.n_states(), mu.len())?;
    check_len("μ̃", mdp.n_states(), mu_tilde.len())?;
    let k = mdp.n_actions();
    let sol_mu = dp_solve(mdp, &TabularPolicy::deterministic(mu, k)?)?;
    let sol_tilde = dp_solve(mdp, &TabularPolicy::deterministic(mu_tilde, k)?)?;
    let sol_pi = dp_solve(mdp, pi)?;
    let first: f64 = (0..mdp.n_states())
        .map(|s| {
            let inner: f64 = (0..k).map(|a| pi.prob(s, a) * sol_mu.advantage[s][a]).sum();
            sol_pi.discounted_states[s] * inner
        })
        .sum();
    let second: f64 = (0..mdp.n_states())
        .map(|s| sol_tilde.discounted_states[s] * sol_pi.advantage[s][mu_tilde[s]])
        .sum();
    Ok((sol_tilde.performance, sol_mu.performance + first + second))
}
