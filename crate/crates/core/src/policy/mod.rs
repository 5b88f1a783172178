//! Deterministic policy representations and Gaussian exploration.

mod exploration;
mod tiles;

pub use exploration::{GaussianExploration, SigmaSchedule, MAX_TRUNCATION_ATTEMPTS};
pub use tiles::TileCoder;

use crate::error::{check_finite, check_len};
use crate::nn::{MlpNet, Mode};
use crate::{Error, Result};

/// Anything that maps a state to an action without randomness.
pub trait DeterministicActor {
    fn act(&self, state: &[f64]) -> Result<Vec<f64>>;
}

impl<F> DeterministicActor for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self(state))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Tanh-output network; the output already lies inside `(−1, 1)`.
    Mlp(MlpNet),
    /// `μ_θ(·) = θ`: the parameters are the action, state is ignored.
    Direct { theta: Vec<f64> },
    /// `μ_θ(s)_k = φ(s)·θ_k` with a binary tile-coding feature map.
    Tiles { coder: TileCoder, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicPolicy {
    repr: Representation,
    state_dim: usize,
    action_dim: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    batch_states: Option<Vec<Vec<f64>>>,
}

impl DeterministicPolicy {
    pub fn mlp(net: MlpNet) -> Self {
        let (state_dim, action_dim) = (net.input_dim(), net.output_dim());
        Self {
            repr: Representation::Mlp(net),
            state_dim,
            action_dim,
            low: vec![-1.0; action_dim],
            high: vec![1.0; action_dim],
            batch_states: None,
        }
    }

    /// `state_dim` only fixes the expected state length; the state is unused.
    pub fn direct(theta: Vec<f64>, state_dim: usize) -> Self {
        let action_dim = theta.len();
        Self {
            repr: Representation::Direct { theta },
            state_dim,
            action_dim,
            low: vec![-1.0; action_dim],
            high: vec![1.0; action_dim],
            batch_states: None,
        }
    }

    pub fn tiles(coder: TileCoder, action_dim: usize) -> Self {
        let state_dim = coder.state_dim();
        let weights = vec![0.0; coder.n_features() * action_dim];
        Self {
            repr: Representation::Tiles { coder, weights },
            state_dim,
            action_dim,
            low: vec![-1.0; action_dim],
            high: vec![1.0; action_dim],
            batch_states: None,
        }
    }

    pub fn with_bounds(mut self, low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        check_len("policy bounds", self.action_dim, low.len())?;
        check_len("policy bounds", self.action_dim, high.len())?;
        self.low = low;
        self.high = high;
        Ok(self)
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn net(&self) -> Option<&MlpNet> {
        match &self.repr {
            Representation::Mlp(net) => Some(net),
            _ => None,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.high)
    }

    pub fn params(&self) -> &[f64] {
        match &self.repr {
            Representation::Mlp(net) => net.params(),
            Representation::Direct { theta } => theta,
            Representation::Tiles { weights, .. } => weights,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.batch_states = None;
        match &mut self.repr {
            Representation::Mlp(net) => net.params_mut(),
            Representation::Direct { theta } => theta,
            Representation::Tiles { weights, .. } => weights,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params().len()
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        check_len("policy state", self.state_dim, state.len())?;
        check_finite("policy state", state)
    }

    fn clip(&self, mut action: Vec<f64>) -> Vec<f64> {
        for ((a, lo), hi) in action.iter_mut().zip(&self.low).zip(&self.high) {
            *a = a.clamp(*lo, *hi);
        }
        action
    }

    fn raw_linear(&self, state: &[f64]) -> Vec<f64> {
        match &self.repr {
            Representation::Direct { theta } => theta.clone(),
            Representation::Tiles { coder, weights } => {
                let active = coder.active(state);
                let n = coder.n_features();
                (0..self.action_dim)
                    .map(|k| active.iter().map(|&i| weights[k * n + i]).sum())
                    .collect()
            }
            Representation::Mlp(_) => unreachable!("linear representations only"),
        }
    }

    /// `μ_θ(s)`, evaluation mode for networks.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        match &self.repr {
            Representation::Mlp(net) => net.forward(state),
            _ => Ok(self.clip(self.raw_linear(state))),
        }
    }

    /// Pure batch evaluation: no caches, no batch-norm statistics update.
    pub fn act_batch(&self, states: &[Vec<f64>], mode: Mode) -> Result<Vec<Vec<f64>>> {
        match &self.repr {
            Representation::Mlp(net) => net.evaluate_batch(states, mode),
            _ => states.iter().map(|s| self.act(s)).collect(),
        }
    }

    /// Batch forward pass that prepares [`backward`](Self::backward).
    pub fn forward_batch(&mut self, states: &[Vec<f64>], mode: Mode) -> Result<Vec<Vec<f64>>> {
        for s in states {
            self.check_state(s)?;
        }
        match &mut self.repr {
            Representation::Mlp(net) => net.forward_batch(states, mode),
            _ => {
                let out = states.iter().map(|s| self.clip(self.raw_linear(s))).collect();
                self.batch_states = Some(states.to_vec());
                Ok(out)
            }
        }
    }

    /// `Σ_n upstream[n]ᵀ ∇_θ μ_θ(s_n)` for the batch of the last
    /// [`forward_batch`](Self::forward_batch).
    ///
    /// Linear representations differentiate the map before clipping.
    pub fn backward(&self, upstream: &[Vec<f64>]) -> Result<Vec<f64>> {
        match &self.repr {
            Representation::Mlp(net) => net.backward(upstream),
            Representation::Direct { theta } => {
                let states = self.batch_states.as_ref().ok_or(Error::NoForwardCache)?;
                check_len("upstream batch", states.len(), upstream.len())?;
                let mut grad = vec![0.0; theta.len()];
                for u in upstream {
                    check_len("upstream gradient", self.action_dim, u.len())?;
                    grad.iter_mut().zip(u).for_each(|(g, ui)| *g += ui);
                }
                Ok(grad)
            }
            Representation::Tiles { coder, weights } => {
                let states = self.batch_states.as_ref().ok_or(Error::NoForwardCache)?;
                check_len("upstream batch", states.len(), upstream.len())?;
                let n = coder.n_features();
                let mut grad = vec![0.0; weights.len()];
                for (s, u) in states.iter().zip(upstream) {
                    check_len("upstream gradient", self.action_dim, u.len())?;
                    for &i in &coder.active(s) {
                        for (k, uk) in u.iter().enumerate() {
                            grad[k * n + i] += uk;
                        }
                    }
                }
                Ok(grad)
            }
        }
    }

    /// `∇_θ μ_θ(s)` as `action_dim` rows of length `n_params`.
    pub fn jacobian(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_state(state)?;
        match &self.repr {
            Representation::Mlp(net) => net.jacobian(state),
            Representation::Direct { theta } => Ok((0..theta.len())
                .map(|k| {
                    let mut row = vec![0.0; theta.len()];
                    row[k] = 1.0;
                    row
                })
                .collect()),
            Representation::Tiles { coder, weights } => {
                let n = coder.n_features();
                let active = coder.active(state);
                Ok((0..self.action_dim)
                    .map(|k| {
                        let mut row = vec![0.0; weights.len()];
                        for &i in &active {
                            row[k * n + i] = 1.0;
                        }
                        row
                    })
                    .collect())
            }
        }
    }

    /// `(a − μ)ᵀ ∇_θ μ_θ(s)` scaled by `weight`, without materializing the Jacobian.
    pub fn weighted_jacobian_product(&self, state: &[f64], direction: &[f64]) -> Result<Vec<f64>> {
        check_len("direction", self.action_dim, direction.len())?;
        match &self.repr {
            Representation::Mlp(net) => {
                let mut scratch = net.clone();
                scratch.forward_batch(&[state.to_vec()], Mode::Evaluation)?;
                scratch.backward(&[direction.to_vec()])
            }
            _ => {
                let mut scratch = self.clone();
                scratch.forward_batch(&[state.to_vec()], Mode::Evaluation)?;
                scratch.backward(&[direction.to_vec()])
            }
        }
    }
}

impl DeterministicActor for DeterministicPolicy {
    fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        DeterministicPolicy::act(self, state)
    }
}
