//! Flat `key=value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. `agent` and `env` are required;
//! everything else falls back to the defaults of [`AgentConfig`] and
//! [`ExperimentConfig`]. Command-line overrides use the same keys.
//! Exploration is given either as `sigma` (standard deviation, the canonical
//! key) or as the variance `sigma2`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::{AgentConfig, AgentRule};
use crate::env::{make_quadratic_bandit, Environment, PointMass};
use crate::nn::Activation;
use crate::policy::SigmaSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvChoice {
    PointMass,
    /// Quadratic bandit of dimension `dim` whose optimum is drawn from `seed`.
    Bandit { dim: usize, seed: u64 },
}

impl EnvChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PointMass => "pointmass",
            Self::Bandit { .. } => "bandit",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            Self::PointMass => Box::new(PointMass::default()),
            Self::Bandit { dim, seed } => Box::new(make_quadratic_bandit(*dim, *seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agent: AgentConfig,
    pub env: EnvChoice,
    pub seeds: usize,
    pub seed_offset: u64,
    pub total_steps: u64,
    /// Training steps between two evaluation phases.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub out: PathBuf,
}

const DEFAULT_SEEDS: usize = 5;
const DEFAULT_TOTAL_STEPS: u64 = 100_000;
const DEFAULT_EVAL_INTERVAL: u64 = 5_000;
const DEFAULT_EVAL_EPISODES: usize = 10;

const KEYS: &[&str] = &[
    "actor_hidden",
    "actor_iterations",
    "actor_lr",
    "agent",
    "bandit_dim",
    "bandit_seed",
    "batch_norm",
    "critic_adam_iterations",
    "critic_hidden",
    "critic_lr",
    "d_target",
    "env",
    "eval_episodes",
    "eval_interval",
    "fitted_iterations",
    "hidden_activation",
    "lambda",
    "nfac_scaled",
    "out",
    "random_optimization",
    "reset_adam",
    "seed_offset",
    "seeds",
    "sigma",
    "sigma2",
    "sigma_decay",
    "sigma_floor",
    "total_steps",
    "update_period",
];

/// Ordered `key → value` pairs with unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            raw.set(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text)
    }

    /// Sets `key`, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `key=value` overrides on top of the current entries.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn take<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let rule: AgentRule = self.required("agent")?.parse()?;
        let mut agent = AgentConfig::with_rule(rule);
        if let Some(v) = self.take::<f64>("lambda")? {
            agent.lambda = v;
        }
        match (self.take::<f64>("sigma")?, self.take::<f64>("sigma2")?) {
            (Some(_), Some(_)) => return Err(Error::Config("give either `sigma` or `sigma2`, not both".into())),
            (Some(v), None) => agent.sigma = v,
            (None, Some(v)) if v > 0.0 => agent.sigma = v.sqrt(),
            (None, Some(v)) => return Err(Error::Config(format!("sigma2 must be positive, got {v}"))),
            (None, None) => {}
        }
        match (self.take::<f64>("sigma_decay")?, self.take::<f64>("sigma_floor")?) {
            (None, None) => {}
            (Some(decay), floor) => {
                agent.sigma_schedule = SigmaSchedule::Exponential {
                    decay,
                    floor: floor.unwrap_or(1e-3),
                }
            }
            (None, Some(_)) => return Err(Error::Config("`sigma_floor` needs `sigma_decay`".into())),
        }
        macro_rules! field {
            ($key:literal, $field:ident) => {
                if let Some(v) = self.take($key)? {
                    agent.$field = v;
                }
            };
        }
        field!("actor_lr", actor_lr);
        field!("critic_lr", critic_lr);
        field!("fitted_iterations", fitted_iterations);
        field!("critic_adam_iterations", critic_adam_iterations);
        field!("actor_iterations", actor_iterations);
        field!("update_period", update_period);
        field!("d_target", d_target);
        field!("batch_norm", batch_norm);
        field!("reset_adam", reset_adam);
        field!("nfac_scaled", nfac_scaled);
        field!("random_optimization", random_optimization);
        if let Some(v) = self.entries.get("hidden_activation") {
            agent.hidden_activation = v.parse::<Activation>()?;
        }
        if let Some(v) = self.entries.get("actor_hidden") {
            agent.actor_hidden = parse_layers("actor_hidden", v)?;
        }
        if let Some(v) = self.entries.get("critic_hidden") {
            agent.critic_hidden = parse_layers("critic_hidden", v)?;
        }
        agent.validate()?;

        let env = match self.required("env")? {
            "pointmass" => {
                if self.entries.contains_key("bandit_dim") || self.entries.contains_key("bandit_seed") {
                    return Err(Error::Config("bandit keys given for env=pointmass".into()));
                }
                EnvChoice::PointMass
            }
            "bandit" => EnvChoice::Bandit {
                dim: self.take("bandit_dim")?.unwrap_or(1),
                seed: self.take("bandit_seed")?.unwrap_or(0),
            },
            other => return Err(Error::Config(format!("unknown env `{other}`"))),
        };
        let config = ExperimentConfig {
            agent,
            env,
            seeds: self.take("seeds")?.unwrap_or(DEFAULT_SEEDS),
            seed_offset: self.take("seed_offset")?.unwrap_or(0),
            total_steps: self.take("total_steps")?.unwrap_or(DEFAULT_TOTAL_STEPS),
            eval_interval: self.take("eval_interval")?.unwrap_or(DEFAULT_EVAL_INTERVAL),
            eval_episodes: self.take("eval_episodes")?.unwrap_or(DEFAULT_EVAL_EPISODES),
            out: self.take::<PathBuf>("out")?.unwrap_or_else(|| PathBuf::from("runs")),
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_layers(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value
        .split('x')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("`{key}`: bad layer width `{w}`"))),
        })
        .collect()
}

fn render_layers(layers: &[usize]) -> String {
    if layers.is_empty() {
        "none".into()
    } else {
        layers.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if let EnvChoice::Bandit { dim: 0, .. } = self.env {
            return Err(Error::Config("bandit_dim must be at least 1".into()));
        }
        self.agent.validate()
    }

    /// Parses a file, then applies `key=value` overrides.
    pub fn load<'a>(path: Option<&Path>, overrides: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut raw = match path {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        raw.apply_overrides(overrides)?;
        raw.build()
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RawConfig::parse_text(s)?.build()
    }
}

/// Canonical form: every key, sorted, one per line. Floats use Rust's
/// shortest round-trip formatting so parsing the output gives back the same
/// configuration.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.agent;
        let mut lines: BTreeMap<&str, String> = BTreeMap::new();
        lines.insert("actor_hidden", render_layers(&a.actor_hidden));
        lines.insert("actor_iterations", a.actor_iterations.to_string());
        lines.insert("actor_lr", a.actor_lr.to_string());
        lines.insert("agent", a.rule.to_string());
        if let EnvChoice::Bandit { dim, seed } = self.env {
            lines.insert("bandit_dim", dim.to_string());
            lines.insert("bandit_seed", seed.to_string());
        }
        lines.insert("batch_norm", a.batch_norm.to_string());
        lines.insert("critic_adam_iterations", a.critic_adam_iterations.to_string());
        lines.insert("critic_hidden", render_layers(&a.critic_hidden));
        lines.insert("critic_lr", a.critic_lr.to_string());
        lines.insert("d_target", a.d_target.to_string());
        lines.insert("env", self.env.name().to_string());
        lines.insert("eval_episodes", self.eval_episodes.to_string());
        lines.insert("eval_interval", self.eval_interval.to_string());
        lines.insert("fitted_iterations", a.fitted_iterations.to_string());
        lines.insert("hidden_activation", a.hidden_activation.to_string());
        lines.insert("lambda", a.lambda.to_string());
        lines.insert("nfac_scaled", a.nfac_scaled.to_string());
        lines.insert("out", self.out.display().to_string());
        lines.insert("random_optimization", a.random_optimization.to_string());
        lines.insert("reset_adam", a.reset_adam.to_string());
        lines.insert("seed_offset", self.seed_offset.to_string());
        lines.insert("seeds", self.seeds.to_string());
        lines.insert("sigma", a.sigma.to_string());
        if let SigmaSchedule::Exponential { decay, floor } = a.sigma_schedule {
            lines.insert("sigma_decay", decay.to_string());
            lines.insert("sigma_floor", floor.to_string());
        }
        lines.insert("total_steps", self.total_steps.to_string());
        lines.insert("update_period", a.update_period.to_string());
        for (k, v) in lines {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
