//! Learning loops: incremental CACLA/CAC, batch NFAC and PeNFAC, and the
//! single-state baselines used to compare SPG, DPG and CACLA.

mod bandit;
mod config;
mod evaluate;
mod learner;
mod trajectory;

pub use bandit::{run_bandit_agent, BanditConfig, BanditCritic, BanditRule};
pub use config::{AgentConfig, AgentRule};
pub use evaluate::{evaluate_deterministic, rollout, InteractionCounters};
pub use learner::{Agent, PhaseRecord};
pub use trajectory::{Trajectory, Transition};
