//! Experiment plumbing: configuration, seeded runs with CSV learning curves,
//! verification suites and the bandit comparison.

mod bandit_suite;
mod config;
mod experiment;
mod verify;

pub use bandit_suite::{
    finals_csv, run_bandit_suite, BanditGrid, BanditSuiteConfig, Comparison, DimResult, RuleResult, TUNING_SEED_BASE,
};
pub use config::{EnvChoice, ExperimentConfig, RawConfig};
pub use experiment::{
    aggregate, aggregate_csv, run_experiment, seed_file, train_seed, worker_pool, AggregateRow, CurveRow,
    ExperimentOutput, LearningCurve, THREADS_VAR,
};
pub use verify::{
    agent_architectures, run_gradcheck_suite, run_verification, Architecture, Suite, VerificationOutcome,
    GRADCHECK_SEEDS, GRADCHECK_TOLERANCE, LEMMA2_TRIALS, THEOREM1_TRIALS, VERIFY_SEED,
};
