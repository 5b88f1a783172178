//! Single-state baselines: SPG and DPG with a compatible Q critic, and
//! CACLA with a one-parameter value estimate.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::critic::{CompatibleQCritic, VCritic};
use crate::env::QuadraticBandit;
use crate::policy::{DeterministicPolicy, GaussianExploration};
use crate::updates::{cacla_direction, dpg_direction, spg_direction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BanditRule {
    Spg,
    Dpg,
    Cacla,
}

impl BanditRule {
    pub const ALL: [BanditRule; 3] = [Self::Spg, Self::Dpg, Self::Cacla];
}

impl fmt::Display for BanditRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spg => "spg",
            Self::Dpg => "dpg",
            Self::Cacla => "cacla",
        })
    }
}

impl FromStr for BanditRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spg" => Ok(Self::Spg),
            "dpg" => Ok(Self::Dpg),
            "cacla" => Ok(Self::Cacla),
            other => Err(Error::Config(format!("unknown bandit rule `{other}`"))),
        }
    }
}

/// How SPG and DPG fit their compatible critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BanditCritic {
    /// One stochastic-gradient step per sample with `critic_lr`.
    Sgd,
    /// Ridge least squares on the last `window` samples, refitted every
    /// episode with features taken at the current `θ`.
    LeastSquares { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditConfig {
    /// Exploration standard deviation.
    pub sigma: f64,
    pub actor_lr: f64,
    /// Step size for `w` (SPG/DPG) and for the value parameter.
    pub critic_lr: f64,
    pub episodes: usize,
    pub critic: BanditCritic,
}

impl BanditConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.actor_lr >= 0.0) || !(self.critic_lr >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.critic == (BanditCritic::LeastSquares { window: 0 }) {
            return Err(Error::Config("least-squares window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trains a policy `μ_θ = θ` from `θ = 0` for `config.episodes` one-step
/// episodes. Entry `k` of the result is the deterministic reward `R(θ)`
/// after `k` episodes (entry 0 is the initial policy).
pub fn run_bandit_agent(
    rule: BanditRule,
    bandit: &QuadraticBandit,
    config: &BanditConfig,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    config.validate()?;
    let m = bandit.action_dim();
    let state = bandit.state();
    let mut policy = DeterministicPolicy::direct(vec![0.0; m], state.len());
    let exploration = GaussianExploration::new(config.sigma)?;
    let mut q = CompatibleQCritic::new(m, VCritic::constant(0.0));
    let mut v = VCritic::constant(0.0);
    let mut history: VecDeque<(Vec<f64>, f64)> = VecDeque::new();
    let mut curve = Vec::with_capacity(config.episodes + 1);
    curve.push(bandit.reward(&policy.act(&state)?));
    for _ in 0..config.episodes {
        let action = exploration.act(&policy, &state, rng)?;
        let reward = bandit.reward(&action);
        if rule != BanditRule::Cacla {
            match config.critic {
                BanditCritic::Sgd => {
                    q.sgd_update(&policy, &state, &action, reward, config.critic_lr, config.critic_lr)?;
                }
                BanditCritic::LeastSquares { window } => {
                    if history.len() == window {
                        history.pop_front();
                    }
                    history.push_back((action.clone(), reward));
                    let states = vec![state.clone(); history.len()];
                    let actions: Vec<Vec<f64>> = history.iter().map(|(a, _)| a.clone()).collect();
                    let targets: Vec<f64> = history.iter().map(|(_, r)| *r).collect();
                    q.fit(&policy, &states, &actions, &targets)?;
                }
            }
        }
        let direction = match rule {
            BanditRule::Spg => {
                let advantage = q.advantage(&policy, &state, &action)?;
                spg_direction(&policy, exploration.sigma(), &state, &action, advantage)?
            }
            BanditRule::Dpg => {
                dpg_direction(&policy, &state, &q.grad_a(&policy, &state)?)?
            }
            BanditRule::Cacla => {
                // horizon one: δ = r − v
                let delta = reward - v.value(&state)?;
                v.params_mut()[0] += config.critic_lr * delta;
                cacla_direction(&policy, &state, &action, delta)?
            }
        };
        direction.apply(&mut policy, config.actor_lr)?;
        curve.push(bandit.reward(&policy.act(&state)?));
    }
    Ok(curve)
}
