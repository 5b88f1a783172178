//! SPG / DPG / CACLA comparison on quadratic bandits of growing dimension.
//!
//! Each rule gets its own exploration and step sizes, picked by grid search
//! on tuning seeds; the picked settings are then run on fresh evaluation
//! seeds and the final deterministic rewards compared with one-sided
//! rank-sum tests.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::agents::{run_bandit_agent, BanditConfig, BanditCritic, BanditRule};
use crate::env::make_quadratic_bandit;
use crate::stats::{mean, rank_sum_greater, RankSumTest};
use crate::{seeded_rng, Error, Result};

/// Offset separating tuning seeds from evaluation seeds.
pub const TUNING_SEED_BASE: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BanditGrid {
    pub sigmas: Vec<f64>,
    /// Actor step sizes tried for SPG and DPG.
    pub gradient_actor_lrs: Vec<f64>,
    /// Step sizes of the SGD-trained compatible critic used by SPG and DPG.
    pub gradient_critic_lrs: Vec<f64>,
    pub cacla_actor_lrs: Vec<f64>,
    /// Step sizes of CACLA's one-parameter value estimate.
    pub cacla_critic_lrs: Vec<f64>,
}

impl Default for BanditGrid {
    fn default() -> Self {
        Self {
            sigmas: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3],
            gradient_actor_lrs: vec![5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2],
            gradient_critic_lrs: vec![0.03, 0.1, 0.3, 1.0],
            cacla_actor_lrs: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            cacla_critic_lrs: vec![0.05, 0.1, 0.2, 0.5],
        }
    }
}

impl BanditGrid {
    fn candidates(&self, rule: BanditRule, episodes: usize, ls_window: Option<usize>) -> Vec<BanditConfig> {
        let mut out = Vec::new();
        for &sigma in &self.sigmas {
            match rule {
                BanditRule::Cacla => {
                    for &actor_lr in &self.cacla_actor_lrs {
                        for &critic_lr in &self.cacla_critic_lrs {
                            out.push(BanditConfig {
                                sigma,
                                actor_lr,
                                critic_lr,
                                episodes,
                                critic: BanditCritic::Sgd,
                            });
                        }
                    }
                }
                BanditRule::Spg | BanditRule::Dpg => {
                    for &actor_lr in &self.gradient_actor_lrs {
                        match ls_window {
                            Some(window) => out.push(BanditConfig {
                                sigma,
                                actor_lr,
                                critic_lr: 0.0,
                                episodes,
                                critic: BanditCritic::LeastSquares { window },
                            }),
                            None => {
                                for &critic_lr in &self.gradient_critic_lrs {
                                    out.push(BanditConfig {
                                        sigma,
                                        actor_lr,
                                        critic_lr,
                                        episodes,
                                        critic: BanditCritic::Sgd,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditSuiteConfig {
    pub dims: Vec<usize>,
    /// Episodes (= samples) per run, the same for every rule.
    pub episodes: usize,
    pub tuning_seeds: u64,
    pub eval_seeds: u64,
    pub seed_offset: u64,
    /// Fit the compatible critic by least squares over this many recent
    /// samples instead of SGD.
    pub ls_window: Option<usize>,
    pub grid: BanditGrid,
}

impl Default for BanditSuiteConfig {
    fn default() -> Self {
        Self {
            dims: vec![1, 50],
            episodes: 1000,
            tuning_seeds: 3,
            eval_seeds: 20,
            seed_offset: 0,
            ls_window: None,
            grid: BanditGrid::default(),
        }
    }
}

/// Final deterministic reward of one run: bandit and agent share `seed`.
fn final_reward(rule: BanditRule, dim: usize, config: &BanditConfig, seed: u64) -> Result<f64> {
    let bandit = make_quadratic_bandit(dim, seed)?;
    let curve = run_bandit_agent(rule, &bandit, config, &mut seeded_rng(seed))?;
    Ok(*curve.last().expect("curve holds the initial reward"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleResult {
    pub rule: BanditRule,
    pub tuned: BanditConfig,
    pub tuning_score: f64,
    /// Final rewards on the evaluation seeds.
    pub finals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub better: BanditRule,
    pub worse: BanditRule,
    pub test: RankSumTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimResult {
    pub dim: usize,
    pub rules: Vec<RuleResult>,
    /// CACLA vs SPG and DPG vs SPG.
    pub comparisons: Vec<Comparison>,
}

impl DimResult {
    pub fn rule(&self, rule: BanditRule) -> &RuleResult {
        self.rules.iter().find(|r| r.rule == rule).expect("every rule is run")
    }

    pub fn comparison(&self, better: BanditRule, worse: BanditRule) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.better == better && c.worse == worse)
    }
}

fn tune(rule: BanditRule, dim: usize, config: &BanditSuiteConfig) -> Result<(BanditConfig, f64)> {
    let candidates = config.grid.candidates(rule, config.episodes, config.ls_window);
    let scores: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|c| {
            let finals = (0..config.tuning_seeds)
                .map(|s| final_reward(rule, dim, c, TUNING_SEED_BASE + s))
                .collect::<Result<Vec<_>>>()?;
            Ok(mean(&finals))
        })
        .collect();
    let mut best: Option<(BanditConfig, f64)> = None;
    for (c, score) in candidates.into_iter().zip(scores) {
        // a candidate whose updates blow up is simply out of the running
        let score = match score {
            Ok(v) => v,
            Err(e) => {
                log::debug!("bandit dim={dim} {rule}: {c:?} discarded: {e}");
                continue;
            }
        };
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((c, score));
        }
    }
    best.ok_or_else(|| Error::invalid(format!("no stable {rule} setting in the grid at dim {dim}")))
}

pub fn run_bandit_suite(config: &BanditSuiteConfig) -> Result<Vec<DimResult>> {
    let mut out = Vec::new();
    for &dim in &config.dims {
        let mut rules = Vec::new();
        for rule in BanditRule::ALL {
            let (tuned, tuning_score) = tune(rule, dim, config)?;
            let finals = (0..config.eval_seeds)
                .into_par_iter()
                .map(|s| final_reward(rule, dim, &tuned, config.seed_offset + s))
                .collect::<Result<Vec<_>>>()?;
            log::info!("bandit dim={dim} {rule}: tuned {tuned:?}");
            rules.push(RuleResult {
                rule,
                tuned,
                tuning_score,
                finals,
            });
        }
        let finals = |r: BanditRule| rules.iter().find(|x| x.rule == r).map(|x| x.finals.clone()).unwrap_or_default();
        let mut comparisons = Vec::new();
        for better in [BanditRule::Cacla, BanditRule::Dpg] {
            comparisons.push(Comparison {
                better,
                worse: BanditRule::Spg,
                test: rank_sum_greater(&finals(better), &finals(BanditRule::Spg))?,
            });
        }
        out.push(DimResult { dim, rules, comparisons });
    }
    Ok(out)
}

impl fmt::Display for DimResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            let min = r.finals.iter().copied().fold(f64::INFINITY, f64::min);
            writeln!(
                f,
                "dim={} rule={} sigma={} actor_lr={} critic_lr={} critic={:?} tuning_score={:.6} mean_final={:.6} min_final={:.6}",
                self.dim,
                r.rule,
                r.tuned.sigma,
                r.tuned.actor_lr,
                r.tuned.critic_lr,
                r.tuned.critic,
                r.tuning_score,
                mean(&r.finals),
                min
            )?;
        }
        for c in &self.comparisons {
            writeln!(
                f,
                "dim={} {}>{} U={} z={:.3} p={:.3e}",
                self.dim, c.better, c.worse, c.test.u, c.test.z, c.test.p_greater
            )?;
        }
        Ok(())
    }
}

/// `dim,rule,seed,final_reward` for every evaluation run.
pub fn finals_csv(results: &[DimResult], seed_offset: u64) -> String {
    let mut out = String::from("dim,rule,seed,final_reward\n");
    for d in results {
        for r in &d.rules {
            for (i, v) in r.finals.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{v}", d.dim, r.rule, seed_offset + i as u64);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_suite_runs_and_reports() {
        let config = BanditSuiteConfig {
            dims: vec![2],
            episodes: 50,
            tuning_seeds: 1,
            eval_seeds: 3,
            grid: BanditGrid {
                sigmas: vec![0.1],
                gradient_actor_lrs: vec![0.01],
                gradient_critic_lrs: vec![0.1],
                cacla_actor_lrs: vec![0.1],
                cacla_critic_lrs: vec![0.1],
            },
            ..BanditSuiteConfig::default()
        };
        let results = run_bandit_suite(&config).unwrap();
        assert_eq!(results[0].rules.len(), 3);
        assert_eq!(results[0].comparisons.len(), 2);
        assert_eq!(results[0].to_string().lines().count(), 5);
        assert_eq!(finals_csv(&results, 0).lines().count(), 10);
    }
}
