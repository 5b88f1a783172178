//! Seeded training runs with periodic greedy evaluation and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::ExperimentConfig;
use crate::agents::Agent;
use crate::stats::{mean, std_dev};
use crate::{seeded_rng, Error, Result};

/// Environment variable capping the worker pool.
pub const THREADS_VAR: &str = "DETAC_THREADS";

/// ChaCha stream reserved for evaluation episodes, so evaluation never
/// shifts the training stream.
const EVAL_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    /// Training environment steps consumed so far.
    pub env_steps: u64,
    pub returns: Vec<f64>,
}

impl CurveRow {
    pub fn mean_return(&self) -> f64 {
        mean(&self.returns)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub seed: u64,
    pub rows: Vec<CurveRow>,
}

impl LearningCurve {
    /// CSV with header `seed,env_steps,mean_return,return_0,…`.
    pub fn to_csv(&self) -> String {
        let width = self.rows.iter().map(|r| r.returns.len()).max().unwrap_or(0);
        let mut out = String::from("seed,env_steps,mean_return");
        for i in 0..width {
            let _ = write!(out, ",return_{i}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", self.seed, row.env_steps, row.mean_return());
            for r in &row.returns {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub env_steps: u64,
    pub mean: f64,
    pub std: f64,
    /// `std/√seeds`.
    pub sem: f64,
}

/// Row-wise statistics of the per-seed mean returns. Curves are aligned by
/// evaluation index and truncated to the shortest; `env_steps` is the
/// smallest step count among the seeds at that index.
pub fn aggregate(curves: &[LearningCurve]) -> Vec<AggregateRow> {
    let len = curves.iter().map(|c| c.rows.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let values: Vec<f64> = curves.iter().map(|c| c.rows[k].mean_return()).collect();
            let std = std_dev(&values);
            AggregateRow {
                env_steps: curves.iter().map(|c| c.rows[k].env_steps).min().unwrap_or(0),
                mean: mean(&values),
                std,
                sem: std / (values.len() as f64).sqrt(),
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("env_steps,mean,std,sem\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.env_steps, r.mean, r.std, r.sem);
    }
    out
}

/// Trains one seed, evaluating the greedy policy at step 0, each time the
/// training step count crosses a multiple of the evaluation interval, and
/// once more at the end.
pub fn train_seed(config: &ExperimentConfig, seed: u64) -> Result<LearningCurve> {
    let mut env = config.env.build()?;
    let mut rng = seeded_rng(seed);
    let mut eval_rng = seeded_rng(seed);
    eval_rng.set_stream(EVAL_STREAM);
    let mut agent = Agent::new(config.agent.clone(), env.spec(), &mut rng)?;
    let mut rows = vec![CurveRow {
        env_steps: 0,
        returns: agent.evaluate(&mut env, config.eval_episodes, &mut eval_rng)?,
    }];
    let interval = config.eval_interval;
    let mut next_eval = interval;
    while agent.counters().training_steps < config.total_steps {
        agent.run_training_episode(&mut env, &mut rng)?;
        let steps = agent.counters().training_steps;
        if steps >= next_eval {
            rows.push(CurveRow {
                env_steps: steps,
                returns: agent.evaluate(&mut env, config.eval_episodes, &mut eval_rng)?,
            });
            next_eval = (steps / interval + 1) * interval;
        }
    }
    let steps = agent.counters().training_steps;
    if rows.last().is_some_and(|r| r.env_steps < steps) {
        rows.push(CurveRow {
            env_steps: steps,
            returns: agent.evaluate(&mut env, config.eval_episodes, &mut eval_rng)?,
        });
    }
    Ok(LearningCurve { seed, rows })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub curves: Vec<LearningCurve>,
    pub seed_files: Vec<PathBuf>,
    pub aggregate_file: PathBuf,
}

pub fn seed_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}.csv"))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Worker pool sized by `DETAC_THREADS` (rayon's default if unset).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Runs every seed, writes `seed_<n>.csv` per seed and `aggregate.csv`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let seeds: Vec<u64> = (0..config.seeds as u64).map(|i| config.seed_offset + i).collect();
    let pool = worker_pool()?;
    let results: Vec<Result<(LearningCurve, PathBuf)>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let curve = train_seed(config, seed)?;
                let path = seed_file(&config.out, seed);
                write(&path, &curve.to_csv())?;
                log::info!("seed {seed} done: {}", path.display());
                Ok((curve, path))
            })
            .collect()
    });
    let mut curves = Vec::with_capacity(seeds.len());
    let mut seed_files = Vec::with_capacity(seeds.len());
    for r in results {
        let (curve, path) = r?;
        curves.push(curve);
        seed_files.push(path);
    }
    let aggregate_file = config.out.join("aggregate.csv");
    write(&aggregate_file, &aggregate_csv(&aggregate(&curves)))?;
    Ok(ExperimentOutput {
        curves,
        seed_files,
        aggregate_file,
    })
}
