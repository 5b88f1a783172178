//! Environment contract and the desk-scale environments.

mod bandit;
mod finite_mdp;
mod pointmass;

pub use bandit::{make_quadratic_bandit, QuadraticBandit};
pub use finite_mdp::{FiniteMdp, FiniteMdpEnv};
pub use pointmass::{PointMass, PointMassParams};

use rand::RngCore;

use crate::error::{check_finite, check_len};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Episode length cap; `None` means the episode only ends on a terminal state.
    pub horizon: Option<usize>,
    pub gamma: f64,
}

impl EnvSpec {
    /// Spec with the default `[-1, 1]` action box.
    pub fn new(state_dim: usize, action_dim: usize, horizon: Option<usize>, gamma: f64) -> Result<Self> {
        Self::with_bounds(
            state_dim,
            vec![-1.0; action_dim],
            vec![1.0; action_dim],
            horizon,
            gamma,
        )
    }

    pub fn with_bounds(
        state_dim: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        horizon: Option<usize>,
        gamma: f64,
    ) -> Result<Self> {
        let action_dim = action_low.len();
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::invalid("state and action dimensions must be positive"));
        }
        check_len("action bounds", action_dim, action_high.len())?;
        if action_low
            .iter()
            .zip(&action_high)
            .any(|(l, h)| !l.is_finite() || !h.is_finite() || l >= h)
        {
            return Err(Error::invalid("action bounds must be finite and non-degenerate"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1)")));
        }
        if horizon == Some(0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(Self {
            state_dim,
            action_dim,
            action_low,
            action_high,
            horizon,
            gamma,
        })
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect()
    }

    /// Validates an action: wrong length or non-finite entries are errors,
    /// out-of-bounds entries are clipped with a warning.
    pub fn admit_action(&self, action: &[f64]) -> Result<Vec<f64>> {
        check_len("action", self.action_dim, action.len())?;
        check_finite("action", action)?;
        let clipped = self.clip_action(action);
        if clipped.as_slice() != action {
            log::warn!("action {action:?} outside bounds, clipped");
        }
        Ok(clipped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// True terminal state: no bootstrapping past it.
    pub terminal: bool,
    /// Horizon cut: the episode ends but the next state still has value.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// An episodic continuous-action environment. Each instance tracks one
/// running episode.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn step(&mut self, action: &[f64], rng: &mut dyn RngCore) -> Result<StepOutcome>;

    /// Independent copy of the current episode, used to try an action
    /// without committing to it. `None` if the environment cannot be copied.
    fn fork(&self) -> Option<Box<dyn Environment>> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        (**self).reset(rng)
    }

    fn step(&mut self, action: &[f64], rng: &mut dyn RngCore) -> Result<StepOutcome> {
        (**self).step(action, rng)
    }

    fn fork(&self) -> Option<Box<dyn Environment>> {
        (**self).fork()
    }
}
