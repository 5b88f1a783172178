//! Actor-critic agents over continuous states.

use rand::RngCore;

use super::evaluate::{evaluate_deterministic, rollout, InteractionCounters};
use super::{AgentConfig, AgentRule, Trajectory, Transition};
use crate::critic::{fitted_value_iteration, lambda_returns, FittedIteration, VCritic};
use crate::env::{EnvSpec, Environment};
use crate::error::check_finite;
use crate::nn::{AdamConfig, AdamState, MlpNet, MlpSpec, Mode, StepDirection};
use crate::policy::{DeterministicPolicy, GaussianExploration};
use crate::updates::{cac_direction, cacla_direction, heaviside, penfac_actor_gradient, policy_distance_dhat, ro_accept, TrustRegionState};
use crate::{Error, Result};

/// Summary of one batch update phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub phase: usize,
    pub states: usize,
    /// Fraction of timesteps with a positive advantage estimate.
    pub positive_fraction: f64,
    /// `d̂` between the policy before and after the phase.
    pub dhat: f64,
    /// Penalty coefficient after adaptation (PeNFAC only).
    pub beta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    gamma: f64,
    policy: DeterministicPolicy,
    exploration: GaussianExploration,
    critic: VCritic,
    actor_opt: AdamState,
    critic_opt: AdamState,
    trust: Option<TrustRegionState>,
    pending: Vec<Trajectory>,
    counters: InteractionCounters,
    phases: Vec<PhaseRecord>,
}

impl Agent {
    /// Networks sized from the environment: a tanh-output actor (batch norm
    /// on its first layer if configured) and a linear-output critic.
    pub fn new<R: rand::Rng + ?Sized>(config: AgentConfig, spec: &EnvSpec, rng: &mut R) -> Result<Self> {
        let mut actor_sizes = vec![spec.state_dim];
        actor_sizes.extend(&config.actor_hidden);
        actor_sizes.push(spec.action_dim);
        let actor_spec = MlpSpec::new(actor_sizes, config.hidden_activation, crate::nn::Activation::Tanh)
            .with_batch_norm(config.batch_norm && !config.actor_hidden.is_empty());
        let mut critic_sizes = vec![spec.state_dim];
        critic_sizes.extend(&config.critic_hidden);
        critic_sizes.push(1);
        let critic_spec = MlpSpec::new(critic_sizes, config.hidden_activation, crate::nn::Activation::Linear);
        let actor = MlpNet::new(actor_spec, rng)?;
        let critic = MlpNet::new(critic_spec, rng)?;
        let policy = DeterministicPolicy::mlp(actor).with_bounds(spec.action_low.clone(), spec.action_high.clone())?;
        Self::from_parts(config, spec.gamma, policy, VCritic::mlp(critic)?)
    }

    pub fn from_parts(config: AgentConfig, gamma: f64, policy: DeterministicPolicy, critic: VCritic) -> Result<Self> {
        config.validate()?;
        if matches!(config.rule, AgentRule::Spg | AgentRule::Dpg) {
            return Err(Error::Config(format!(
                "`{}` runs through the single-state baseline loop",
                config.rule
            )));
        }
        let exploration = GaussianExploration::with_schedule(config.sigma, config.sigma_schedule)?;
        let actor_opt = AdamState::new(policy.n_params(), AdamConfig::new(config.actor_lr));
        let critic_opt = AdamState::new(critic.params().len(), AdamConfig::new(config.critic_lr));
        let trust = match config.rule {
            AgentRule::Penfac => Some(TrustRegionState::new(config.d_target)?),
            _ => None,
        };
        Ok(Self {
            config,
            gamma,
            policy,
            exploration,
            critic,
            actor_opt,
            critic_opt,
            trust,
            pending: Vec::new(),
            counters: InteractionCounters::default(),
            phases: Vec::new(),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn policy(&self) -> &DeterministicPolicy {
        &self.policy
    }

    pub fn policy_mut(&mut self) -> &mut DeterministicPolicy {
        &mut self.policy
    }

    pub fn critic(&self) -> &VCritic {
        &self.critic
    }

    pub fn critic_mut(&mut self) -> &mut VCritic {
        &mut self.critic
    }

    pub fn exploration(&self) -> &GaussianExploration {
        &self.exploration
    }

    pub fn counters(&self) -> InteractionCounters {
        self.counters
    }

    pub fn phases(&self) -> &[PhaseRecord] {
        &self.phases
    }

    pub fn beta(&self) -> Option<f64> {
        self.trust.as_ref().map(|t| t.beta)
    }

    /// Forces the penalty coefficient (PeNFAC only).
    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        let trust = self.trust.as_mut().ok_or_else(|| Error::invalid("only PeNFAC has a penalty coefficient"))?;
        trust.beta = beta;
        Ok(())
    }

    /// Plays one exploratory episode and learns from it: per step for
    /// CACLA/CAC, or by queueing it for the next batch phase.
    pub fn run_training_episode(&mut self, env: &mut dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let trajectory = if self.config.rule.is_batch() {
            let policy = &self.policy;
            let exploration = &self.exploration;
            rollout(env, rng, |s, rng| exploration.act(policy, s, rng))?
        } else {
            self.incremental_episode(env, rng)?
        };
        self.counters.training_steps += trajectory.len() as u64;
        self.counters.training_episodes += 1;
        self.exploration.anneal();
        if self.config.rule.is_batch() {
            self.pending.push(trajectory.clone());
            if self.pending.len() >= self.config.update_period {
                let batch = std::mem::take(&mut self.pending);
                self.update_phase(&batch)?;
            }
        }
        Ok(trajectory)
    }

    fn incremental_episode(&mut self, env: &mut dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let mut state = env.reset(rng);
        let mut trajectory = Trajectory::new();
        loop {
            let mut action = self.exploration.act(&self.policy, &state, rng)?;
            if self.config.random_optimization {
                action = self.hill_climb(env, &state, action, rng)?;
            }
            let action = env.spec().admit_action(&action)?;
            let outcome = env.step(&action, rng)?;
            let transition = Transition {
                state: state.clone(),
                action,
                reward: outcome.reward,
                next_state: outcome.next_state.clone(),
                terminal: outcome.terminal,
            };
            let delta = self.critic.td_update(&transition, self.gamma, self.config.critic_lr)?;
            let direction = match self.config.rule {
                AgentRule::Cac => cac_direction(&self.policy, &transition.state, &transition.action, delta)?,
                _ => cacla_direction(&self.policy, &transition.state, &transition.action, delta)?,
            };
            if !direction.is_zero() {
                direction.apply(&mut self.policy, self.config.actor_lr)?;
            }
            trajectory.push(transition);
            if outcome.done() {
                return Ok(trajectory);
            }
            state = outcome.next_state;
        }
    }

    /// One random-optimization step: try `a' = a + noise` on a copy of the
    /// environment and keep it if its one-step TD error is positive.
    fn hill_climb(
        &self,
        env: &dyn Environment,
        state: &[f64],
        current: Vec<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        let Some(mut probe) = env.fork() else {
            return Ok(current);
        };
        let (low, high) = self.policy.bounds();
        let proposal = self.exploration.sample_around(&current, low, high, rng);
        let outcome = probe.step(&proposal, rng)?;
        let trial = Transition {
            state: state.to_vec(),
            action: proposal,
            reward: outcome.reward,
            next_state: outcome.next_state,
            terminal: outcome.terminal,
        };
        self.counters_note_probe();
        ro_accept(&self.critic, &current, &trial, self.gamma)
    }

    fn counters_note_probe(&self) {
        log::trace!("hill-climbing probe on a forked environment");
    }

    /// Runs the NFAC or PeNFAC update on `batch`.
    pub fn update_phase(&mut self, batch: &[Trajectory]) -> Result<PhaseRecord> {
        if batch.iter().all(Trajectory::is_empty) {
            return Err(Error::invalid("update phase needs a non-empty batch"));
        }
        if !self.config.rule.is_batch() {
            return Err(Error::invalid("update phases belong to NFAC and PeNFAC"));
        }
        if self.config.reset_adam {
            self.actor_opt.reset();
            self.critic_opt.reset();
        }
        let fit = FittedIteration {
            gamma: self.gamma,
            lambda: self.config.lambda,
            iterations: self.config.fitted_iterations,
            adam_iterations: self.config.critic_adam_iterations,
        };
        fitted_value_iteration(&mut self.critic, batch, fit, &mut self.critic_opt)?;

        let mut states = Vec::new();
        let mut actions = Vec::new();
        let mut advantages = Vec::new();
        for trajectory in batch.iter().filter(|t| !t.is_empty()) {
            let returns = lambda_returns(trajectory, &self.critic, self.gamma, self.config.lambda)?;
            advantages.extend(returns.advantages());
            for t in &trajectory.transitions {
                states.push(t.state.clone());
                actions.push(t.action.clone());
            }
        }
        check_finite("advantages", &advantages)?;
        let positive = advantages.iter().filter(|a| **a > 0.0).count();

        // d̂ uses the batch statistics of the gathered states, the same
        // normalization as μ_old in the penalty; running statistics drift
        // during the phase independently of the weights.
        let before = self.policy.act_batch(&states, Mode::Training)?;
        let beta = match self.config.rule {
            AgentRule::Penfac => Some(self.penfac_actor(&states, &actions, &advantages)?),
            _ => {
                self.nfac_actor(&states, &actions, &advantages)?;
                None
            }
        };
        let after = self.policy.act_batch(&states, Mode::Training)?;
        let dhat = policy_distance_dhat(&before, &after)?;
        let beta = match (beta, self.trust.as_mut()) {
            (Some(_), Some(trust)) => Some(trust.adapt(dhat)),
            _ => None,
        };
        let record = PhaseRecord {
            phase: self.phases.len(),
            states: states.len(),
            positive_fraction: positive as f64 / states.len() as f64,
            dhat,
            beta,
        };
        self.phases.push(record.clone());
        Ok(record)
    }

    fn nfac_actor(&mut self, states: &[Vec<f64>], actions: &[Vec<f64>], advantages: &[f64]) -> Result<()> {
        if advantages.iter().all(|a| *a <= 0.0) {
            return Ok(());
        }
        let inv_n = 1.0 / states.len() as f64;
        let scaled = self.config.nfac_scaled;
        for _ in 0..self.config.actor_iterations {
            let mu = self.policy.forward_batch(states, Mode::Training)?;
            let upstream: Vec<Vec<f64>> = mu
                .iter()
                .zip(actions)
                .zip(advantages)
                .map(|((m, a), &adv)| {
                    let weight = if scaled { adv * heaviside(adv) } else { heaviside(adv) };
                    m.iter().zip(a).map(|(mi, ai)| inv_n * weight * (ai - mi)).collect()
                })
                .collect();
            let grad = self.policy.backward(&upstream)?;
            self.actor_opt.step(self.policy.params_mut(), &grad, StepDirection::Ascent)?;
        }
        Ok(())
    }

    /// Returns the `β` used during the phase.
    fn penfac_actor(&mut self, states: &[Vec<f64>], actions: &[Vec<f64>], advantages: &[f64]) -> Result<f64> {
        let trust = self.trust.as_mut().ok_or_else(|| Error::invalid("PeNFAC needs a trust region"))?;
        trust.take_snapshot(&self.policy, states.len());
        let beta = trust.beta;
        // μ_old under the same batch statistics the update uses
        let old = self.policy.act_batch(states, Mode::Training)?;
        for _ in 0..self.config.actor_iterations {
            let g = penfac_actor_gradient(&mut self.policy, &old, states, actions, advantages, beta, Mode::Training)?;
            self.actor_opt.step(self.policy.params_mut(), &g.values, StepDirection::Ascent)?;
        }
        Ok(beta)
    }

    /// Greedy evaluation; never feeds learning.
    pub fn evaluate(&mut self, env: &mut dyn Environment, episodes: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        evaluate_deterministic(&self.policy, env, episodes, rng, &mut self.counters)
    }
}
