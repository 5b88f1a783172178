//! Policy update directions, all in the ascent convention `θ ← θ + α·g`.
//!
//! CACLA and CAC are written in the paper as descent steps on
//! `(μ_θ(s) − a)`; here they are stored negated, as `(a − μ_θ(s))`.

use std::fmt;

use crate::agents::Transition;
use crate::critic::{td_error, VCritic};
use crate::error::{check_finite, check_len};
use crate::nn::Mode;
use crate::policy::{DeterministicActor, DeterministicPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateRule {
    Spg,
    Dpg,
    Cacla,
    Cac,
    Penfac,
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spg => "spg",
            Self::Dpg => "dpg",
            Self::Cacla => "cacla",
            Self::Cac => "cac",
            Self::Penfac => "penfac",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDirection {
    pub values: Vec<f64>,
    pub rule: UpdateRule,
}

impl UpdateDirection {
    fn new(values: Vec<f64>, rule: UpdateRule) -> Result<Self> {
        check_finite("update direction", &values)?;
        Ok(Self { values, rule })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `θ ← θ + α·g`.
    pub fn apply(&self, policy: &mut DeterministicPolicy, step_size: f64) -> Result<()> {
        check_len("update direction", policy.n_params(), self.values.len())?;
        for (p, g) in policy.params_mut().iter_mut().zip(&self.values) {
            *p += step_size * g;
        }
        Ok(())
    }
}

/// `H(x)` with `H(0) = 0`.
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn toward_action(policy: &DeterministicPolicy, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
    let mu = policy.act(state)?;
    check_len("action", mu.len(), action.len())?;
    check_finite("action", action)?;
    let diff: Vec<f64> = action.iter().zip(&mu).map(|(a, m)| a - m).collect();
    policy.weighted_jacobian_product(state, &diff)
}

fn finite_signal(name: &'static str, x: f64) -> Result<()> {
    check_finite(name, &[x])
}

/// `H(δ)·∇_θμ_θ(s)ᵀ(a − μ_θ(s))`.
pub fn cacla_direction(policy: &DeterministicPolicy, state: &[f64], action: &[f64], delta: f64) -> Result<UpdateDirection> {
    finite_signal("TD error", delta)?;
    if delta <= 0.0 {
        return UpdateDirection::new(vec![0.0; policy.n_params()], UpdateRule::Cacla);
    }
    UpdateDirection::new(toward_action(policy, state, action)?, UpdateRule::Cacla)
}

/// `δ·H(δ)·∇_θμ_θ(s)ᵀ(a − μ_θ(s))`.
pub fn cac_direction(policy: &DeterministicPolicy, state: &[f64], action: &[f64], delta: f64) -> Result<UpdateDirection> {
    let mut g = cacla_direction(policy, state, action, delta)?;
    g.rule = UpdateRule::Cac;
    if delta > 0.0 {
        g.values.iter_mut().for_each(|v| *v *= delta);
    }
    Ok(g)
}

/// Single-sample `Â(s,a)·∇_θμ_θ(s)ᵀ(a − μ_θ(s))/σ²`.
pub fn spg_direction(
    policy: &DeterministicPolicy,
    sigma: f64,
    state: &[f64],
    action: &[f64],
    advantage: f64,
) -> Result<UpdateDirection> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("SPG needs σ > 0, got {sigma}")));
    }
    finite_signal("advantage", advantage)?;
    let scale = advantage / (sigma * sigma);
    let values = toward_action(policy, state, action)?.into_iter().map(|v| v * scale).collect();
    UpdateDirection::new(values, UpdateRule::Spg)
}

/// `∇_θμ_θ(s)ᵀ ∇_aÂ(s,a)|_{a=μ_θ(s)}`.
pub fn dpg_direction(policy: &DeterministicPolicy, state: &[f64], grad_a: &[f64]) -> Result<UpdateDirection> {
    check_len("action gradient", policy.action_dim(), grad_a.len())?;
    check_finite("action gradient", grad_a)?;
    UpdateDirection::new(policy.weighted_jacobian_product(state, grad_a)?, UpdateRule::Dpg)
}

/// `d̂ = (1/√(m·L)) Σ_s ‖μ_old(s) − μ(s)‖₂` from actions already evaluated
/// on the same `L` states.
pub fn policy_distance_dhat(old_actions: &[Vec<f64>], new_actions: &[Vec<f64>]) -> Result<f64> {
    check_len("policy distance states", old_actions.len(), new_actions.len())?;
    if old_actions.is_empty() {
        return Err(Error::invalid("policy distance needs at least one state"));
    }
    let m = old_actions[0].len();
    let mut total = 0.0;
    for (a, b) in old_actions.iter().zip(new_actions) {
        check_len("policy distance action", m, a.len())?;
        check_len("policy distance action", m, b.len())?;
        total += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    }
    Ok(total / ((m * old_actions.len()) as f64).sqrt())
}

/// [`policy_distance_dhat`] evaluating both policies on `states`.
pub fn policy_distance(
    old: &impl DeterministicActor,
    new: &impl DeterministicActor,
    states: &[Vec<f64>],
) -> Result<f64> {
    let a: Vec<Vec<f64>> = states.iter().map(|s| old.act(s)).collect::<Result<_>>()?;
    let b: Vec<Vec<f64>> = states.iter().map(|s| new.act(s)).collect::<Result<_>>()?;
    policy_distance_dhat(&a, &b)
}

pub const BETA_MIN: f64 = 1e-6;
pub const BETA_MAX: f64 = 1e6;

/// Halve `β` below `d_target/1.5`, double it above `1.5·d_target`, clamp.
pub fn adapt_beta(beta: f64, dhat: f64, d_target: f64) -> f64 {
    let next = if dhat < d_target / 1.5 {
        beta / 2.0
    } else if dhat > d_target * 1.5 {
        beta * 2.0
    } else {
        beta
    };
    next.clamp(BETA_MIN, BETA_MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionState {
    pub beta: f64,
    pub d_target: f64,
    /// `μ_old` for the current phase.
    pub snapshot: Option<DeterministicPolicy>,
    /// Number of states gathered in the current phase.
    pub gathered_states: usize,
}

impl TrustRegionState {
    pub fn new(d_target: f64) -> Result<Self> {
        if !(d_target > 0.0) {
            return Err(Error::invalid(format!("d_target must be positive, got {d_target}")));
        }
        Ok(Self {
            beta: 1.0,
            d_target,
            snapshot: None,
            gathered_states: 0,
        })
    }

    pub fn take_snapshot(&mut self, policy: &DeterministicPolicy, gathered_states: usize) {
        self.snapshot = Some(policy.clone());
        self.gathered_states = gathered_states;
    }

    pub fn adapt(&mut self, dhat: f64) -> f64 {
        self.beta = adapt_beta(self.beta, dhat, self.d_target);
        self.beta
    }
}

/// Mean over the batch of `CAC(s_t, a_t, Â_t) − 2β·∇_θμ_θ(s_t)ᵀ(μ_θ(s_t) − μ_old(s_t))`.
///
/// `old_actions[t]` is the snapshot's action at `s_t`, held constant. The
/// policy's batch forward (in `mode`) is cached by this call.
pub fn penfac_actor_gradient(
    policy: &mut DeterministicPolicy,
    old_actions: &[Vec<f64>],
    states: &[Vec<f64>],
    actions: &[Vec<f64>],
    advantages: &[f64],
    beta: f64,
    mode: Mode,
) -> Result<UpdateDirection> {
    let n = states.len();
    check_len("snapshot actions", n, old_actions.len())?;
    check_len("batch actions", n, actions.len())?;
    check_len("advantages", n, advantages.len())?;
    if n == 0 {
        return Err(Error::invalid("actor gradient needs a non-empty batch"));
    }
    check_finite("advantages", advantages)?;
    let mu = policy.forward_batch(states, mode)?;
    let inv_n = 1.0 / n as f64;
    let upstream: Vec<Vec<f64>> = mu
        .iter()
        .zip(old_actions)
        .zip(actions.iter().zip(advantages))
        .map(|((m, old), (a, &adv))| {
            let gate = adv * heaviside(adv);
            m.iter()
                .zip(old)
                .zip(a)
                .map(|((mi, oi), ai)| inv_n * (gate * (ai - mi) - 2.0 * beta * (mi - oi)))
                .collect()
        })
        .collect();
    UpdateDirection::new(policy.backward(&upstream)?, UpdateRule::Penfac)
}

/// Hill-climbing acceptance: keep the proposal iff its one-step TD error is
/// strictly positive, `r + γ·V̂(s') > V̂(s)`.
pub fn ro_accept(critic: &VCritic, current: &[f64], proposal: &Transition, gamma: f64) -> Result<Vec<f64>> {
    if td_error(critic, proposal, gamma)? > 0.0 {
        Ok(proposal.action.clone())
    } else {
        Ok(current.to_vec())
    }
}
