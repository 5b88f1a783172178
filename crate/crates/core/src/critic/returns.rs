//! TD errors and λ-returns.

use super::VCritic;
use crate::agents::{Trajectory, Transition};
use crate::error::check_len;
use crate::{Error, Result};

/// `δ = r + γ·V̂(s')·(1 − terminal) − V̂(s)`.
pub fn td_error(critic: &VCritic, transition: &Transition, gamma: f64) -> Result<f64> {
    let v = critic.value(&transition.state)?;
    let bootstrap = if transition.terminal {
        0.0
    } else {
        gamma * critic.value(&transition.next_state)?
    };
    Ok(transition.reward + bootstrap - v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaReturnBatch {
    /// `G^λ_t` per timestep.
    pub targets: Vec<f64>,
    /// `V̂(s_t)` per timestep.
    pub values: Vec<f64>,
    /// `V̂(s_{t+1})`, zero after a terminal transition.
    pub next_values: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

impl LambdaReturnBatch {
    /// `Â_t = G^λ_t − V̂(s_t)`.
    pub fn advantages(&self) -> Vec<f64> {
        self.targets.iter().zip(&self.values).map(|(g, v)| g - v).collect()
    }
}

/// Backward recursion `G_t = r_t + γ[(1−λ)·V_{t+1} + λ·G_{t+1}]`.
///
/// `next_values[t]` is `V̂(s_{t+1})`. A terminal last step yields `G = r`;
/// a non-terminal last step is a horizon cut and yields `r + γ·V̂(s_h)`.
pub fn lambda_targets(rewards: &[f64], next_values: &[f64], ends_terminal: bool, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::invalid("λ-returns need a non-empty trajectory"));
    }
    check_len("next values", rewards.len(), next_values.len())?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("λ must lie in [0, 1], got {lambda}")));
    }
    let h = rewards.len();
    let mut targets = vec![0.0; h];
    targets[h - 1] = if ends_terminal {
        rewards[h - 1]
    } else {
        rewards[h - 1] + gamma * next_values[h - 1]
    };
    for t in (0..h - 1).rev() {
        targets[t] = rewards[t] + gamma * ((1.0 - lambda) * next_values[t] + lambda * targets[t + 1]);
    }
    Ok(targets)
}

pub fn lambda_returns(trajectory: &Trajectory, critic: &VCritic, gamma: f64, lambda: f64) -> Result<LambdaReturnBatch> {
    if trajectory.is_empty() {
        return Err(Error::invalid("λ-returns need a non-empty trajectory"));
    }
    let states: Vec<Vec<f64>> = trajectory.transitions.iter().map(|t| t.state.clone()).collect();
    let successors: Vec<Vec<f64>> = trajectory.transitions.iter().map(|t| t.next_state.clone()).collect();
    let values = critic.values(&states)?;
    let mut next_values = critic.values(&successors)?;
    for (v, t) in next_values.iter_mut().zip(&trajectory.transitions) {
        if t.terminal {
            *v = 0.0;
        }
    }
    let rewards: Vec<f64> = trajectory.transitions.iter().map(|t| t.reward).collect();
    let targets = lambda_targets(&rewards, &next_values, trajectory.ends_terminal(), gamma, lambda)?;
    Ok(LambdaReturnBatch {
        targets,
        values,
        next_values,
        gamma,
        lambda,
    })
}
