//! Deterministic evaluation and interaction bookkeeping.

use rand::RngCore;

use super::{Trajectory, Transition};
use crate::env::Environment;
use crate::policy::DeterministicActor;
use crate::Result;

/// Training and evaluation interactions are counted separately; only the
/// training counters describe data an agent may learn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InteractionCounters {
    pub training_steps: u64,
    pub training_episodes: u64,
    pub evaluation_steps: u64,
    pub evaluation_episodes: u64,
}

/// Plays one episode with `choose` picking each action.
pub fn rollout(
    env: &mut dyn Environment,
    rng: &mut dyn RngCore,
    mut choose: impl FnMut(&[f64], &mut dyn RngCore) -> Result<Vec<f64>>,
) -> Result<Trajectory> {
    let mut state = env.reset(rng);
    let mut trajectory = Trajectory::new();
    loop {
        let action = choose(&state, rng)?;
        let action = env.spec().admit_action(&action)?;
        let outcome = env.step(&action, rng)?;
        let done = outcome.done();
        trajectory.push(Transition {
            state,
            action,
            reward: outcome.reward,
            next_state: outcome.next_state.clone(),
            terminal: outcome.terminal,
        });
        if done {
            return Ok(trajectory);
        }
        state = outcome.next_state;
    }
}

/// Undiscounted returns of `episodes` greedy episodes. The interactions are
/// recorded in the evaluation counters only.
pub fn evaluate_deterministic(
    policy: &impl DeterministicActor,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut dyn RngCore,
    counters: &mut InteractionCounters,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let t = rollout(env, rng, |s, _| policy.act(s))?;
        counters.evaluation_steps += t.len() as u64;
        counters.evaluation_episodes += 1;
        returns.push(t.episode_return());
    }
    Ok(returns)
}
