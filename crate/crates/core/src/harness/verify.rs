//! Verification suites behind `detac verify`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::agents::AgentConfig;
use crate::nn::{gradient_check, Activation, MlpNet, MlpSpec, Mode};
use crate::oracle::{run_lemma1_suite, run_lemma2_suite, run_theorem1_suite, SuiteReport, TrialLine};
use crate::{seeded_rng, Error, Result};

pub const VERIFY_SEED: u64 = 7;
pub const LEMMA2_TRIALS: usize = 100;
pub const THEOREM1_TRIALS: usize = 50;
pub const GRADCHECK_SEEDS: u64 = 20;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
const GRADCHECK_STEP: f64 = 5e-4;
const GRADCHECK_BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Lemma2,
    Theorem1,
    Gradcheck,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemma1" => Self::Lemma1,
            "lemma2" => Self::Lemma2,
            "theorem1" => Self::Theorem1,
            "gradcheck" => Self::Gradcheck,
            "all" => Self::All,
            other => return Err(Error::Config(format!("unknown suite `{other}`"))),
        })
    }
}

/// One network shape built by the agents, with the modes its backward pass
/// runs in.
#[derive(Debug, Clone)]
pub struct Architecture {
    pub name: String,
    pub spec: MlpSpec,
    pub input_range: f64,
    pub modes: Vec<Mode>,
}

/// Distinct actor and critic shapes [`crate::agents::Agent::new`] builds
/// with default settings for PointMass (2-D state, 1-D action) and for 1-D
/// and 50-D quadratic bandits (1-D state; both share one critic shape).
pub fn agent_architectures() -> Vec<Architecture> {
    let config = AgentConfig::default();
    let mut out = Vec::new();
    for (env, state_dim, action_dim, range) in [("pointmass", 2, 1, 2.0), ("bandit1", 1, 1, 1.0), ("bandit50", 1, 50, 1.0)] {
        let mut actor = vec![state_dim];
        actor.extend(&config.actor_hidden);
        actor.push(action_dim);
        out.push(Architecture {
            name: format!("{env}-actor"),
            spec: MlpSpec::new(actor, config.hidden_activation, Activation::Tanh).with_batch_norm(config.batch_norm),
            input_range: range,
            modes: vec![Mode::Training, Mode::Evaluation],
        });
        let mut critic = vec![state_dim];
        critic.extend(&config.critic_hidden);
        critic.push(1);
        let spec = MlpSpec::new(critic, config.hidden_activation, Activation::Linear);
        if out.iter().all(|a: &Architecture| a.spec != spec) {
            out.push(Architecture {
                name: format!("{env}-critic"),
                spec,
                input_range: range,
                modes: vec![Mode::Training],
            });
        }
    }
    out
}

/// Finite-difference check of every parameter of every agent architecture
/// over `seeds` random initializations, inputs and upstream weights.
pub fn run_gradcheck_suite(seed: u64, seeds: u64) -> Result<SuiteReport> {
    let mut lines = Vec::new();
    for arch in agent_architectures() {
        for s in 0..seeds {
            let mut rng = seeded_rng(seed.wrapping_mul(1000).wrapping_add(s));
            let net = MlpNet::new(arch.spec.clone(), &mut rng)?;
            let inputs: Vec<Vec<f64>> = (0..GRADCHECK_BATCH)
                .map(|_| (0..net.input_dim()).map(|_| rng.random_range(-arch.input_range..arch.input_range)).collect())
                .collect();
            let upstream: Vec<Vec<f64>> = (0..GRADCHECK_BATCH)
                .map(|_| (0..net.output_dim()).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            for &mode in &arch.modes {
                let report = gradient_check(&net, &inputs, &upstream, mode, GRADCHECK_STEP)?;
                lines.push(TrialLine {
                    index: lines.len(),
                    inputs: format!(
                        "arch={} seed={s} mode={mode:?} checked={} skipped_kinks={}",
                        arch.name, report.checked, report.skipped_kinks
                    ),
                    lhs: report.max_relative_error,
                    rhs: GRADCHECK_TOLERANCE,
                    residual: report.max_relative_error,
                    pass: report.passes(GRADCHECK_TOLERANCE),
                });
            }
        }
    }
    let mut report = SuiteReport {
        name: "gradcheck",
        trials: lines,
        summary: String::new(),
    };
    report.summary = format!(
        "max_relative_error={:.3e} tolerance={GRADCHECK_TOLERANCE:e}",
        report.max_residual()
    );
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct VerificationOutcome {
    pub reports: Vec<SuiteReport>,
}

impl VerificationOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(SuiteReport::passed)
    }

    /// Process exit status: 0 if every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for VerificationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.reports {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Runs `suite` with the fixed default seed.
pub fn run_verification(suite: Suite) -> Result<VerificationOutcome> {
    let mut reports = Vec::new();
    if matches!(suite, Suite::Lemma1 | Suite::All) {
        reports.push(run_lemma1_suite()?);
    }
    if matches!(suite, Suite::Lemma2 | Suite::All) {
        reports.push(run_lemma2_suite(VERIFY_SEED, LEMMA2_TRIALS)?);
    }
    if matches!(suite, Suite::Theorem1 | Suite::All) {
        reports.push(run_theorem1_suite(VERIFY_SEED, THEOREM1_TRIALS)?);
    }
    if matches!(suite, Suite::Gradcheck | Suite::All) {
        reports.push(run_gradcheck_suite(VERIFY_SEED, GRADCHECK_SEEDS)?);
    }
    Ok(VerificationOutcome { reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("lemma2".parse::<Suite>().unwrap(), Suite::Lemma2);
        assert!("lemma3".parse::<Suite>().is_err());
    }

    #[test]
    fn architectures_match_agent_construction() {
        use crate::agents::Agent;
        use crate::env::{Environment, PointMass};
        let env = PointMass::default();
        let agent = Agent::new(AgentConfig::default(), env.spec(), &mut seeded_rng(0)).unwrap();
        let archs = agent_architectures();
        assert_eq!(agent.policy().net().unwrap().spec(), &archs[0].spec);
    }

    #[test]
    fn gradcheck_suite_passes_on_one_seed() {
        let report = run_gradcheck_suite(VERIFY_SEED, 1).unwrap();
        assert!(report.passed(), "{report}");
    }
}
