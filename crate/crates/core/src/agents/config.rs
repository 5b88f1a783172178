//! Agent hyperparameters.

use std::fmt;
use std::str::FromStr;

use crate::nn::Activation;
use crate::policy::SigmaSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentRule {
    Cacla,
    Cac,
    Nfac,
    Penfac,
    Spg,
    Dpg,
}

impl AgentRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cacla => "cacla",
            Self::Cac => "cac",
            Self::Nfac => "nfac",
            Self::Penfac => "penfac",
            Self::Spg => "spg",
            Self::Dpg => "dpg",
        }
    }

    /// Rules that learn from batches of episodes.
    pub fn is_batch(self) -> bool {
        matches!(self, Self::Nfac | Self::Penfac)
    }
}

impl fmt::Display for AgentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "cacla" => Self::Cacla,
            "cac" => Self::Cac,
            "nfac" => Self::Nfac,
            "penfac" => Self::Penfac,
            "spg" => Self::Spg,
            "dpg" => Self::Dpg,
            other => return Err(Error::Config(format!("unknown agent `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub rule: AgentRule,
    pub lambda: f64,
    /// Exploration standard deviation (σ, not σ²).
    pub sigma: f64,
    pub sigma_schedule: SigmaSchedule,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Fitted value iterations per update phase (`K`).
    pub fitted_iterations: usize,
    /// Adam steps per critic regression pass.
    pub critic_adam_iterations: usize,
    /// Adam steps on the actor per update phase.
    pub actor_iterations: usize,
    /// Episodes gathered per update phase.
    pub update_period: usize,
    pub d_target: f64,
    pub batch_norm: bool,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    /// Reset both Adam moment estimates at the start of every phase.
    pub reset_adam: bool,
    /// Scale the NFAC actor direction by the advantage (CAC instead of CACLA).
    pub nfac_scaled: bool,
    /// Hill-climbing second proposal for incremental CACLA/CAC.
    pub random_optimization: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            rule: AgentRule::Penfac,
            lambda: 0.9,
            sigma: 0.2f64.sqrt(),
            sigma_schedule: SigmaSchedule::Constant,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            fitted_iterations: 10,
            critic_adam_iterations: 1,
            actor_iterations: 30,
            update_period: 5,
            d_target: 0.03,
            batch_norm: true,
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            hidden_activation: Activation::LeakyRelu,
            reset_adam: false,
            nfac_scaled: false,
            random_optimization: false,
        }
    }
}

impl AgentConfig {
    pub fn with_rule(rule: AgentRule) -> Self {
        Self {
            rule,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma", self.sigma),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("d_target", self.d_target),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.update_period == 0 {
            return Err(Error::Config("update_period must be at least 1".into()));
        }
        if self.rule.is_batch() && (self.fitted_iterations == 0 || self.actor_iterations == 0) {
            return Err(Error::Config("fitted_iterations and actor_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_rules_parse() {
        AgentConfig::default().validate().unwrap();
        for rule in ["cacla", "cac", "nfac", "penfac", "spg", "dpg"] {
            assert_eq!(rule.parse::<AgentRule>().unwrap().name(), rule);
        }
        assert!("ppo".parse::<AgentRule>().is_err());
    }

    #[test]
    fn zero_fitted_iterations_rejected() {
        let c = AgentConfig {
            fitted_iterations: 0,
            ..AgentConfig::with_rule(AgentRule::Nfac)
        };
        assert!(c.validate().is_err());
    }
}
