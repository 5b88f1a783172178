//! State-value critics and fitted value iteration.

use super::returns::{lambda_returns, td_error};
use crate::agents::{Trajectory, Transition};
use crate::error::{check_finite, check_len};
use crate::nn::{AdamState, MlpNet, Mode, StepDirection};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum VCritic {
    /// One value per state of a finite MDP; the state is `[index]`.
    Tabular { values: Vec<f64> },
    /// A single parameter shared by every state.
    Constant { value: f64 },
    /// Network with one linear output.
    Mlp(MlpNet),
}

impl VCritic {
    pub fn tabular(values: Vec<f64>) -> Self {
        Self::Tabular { values }
    }

    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn mlp(net: MlpNet) -> Result<Self> {
        check_len("critic output", 1, net.output_dim())?;
        Ok(Self::Mlp(net))
    }

    fn table_index(values: &[f64], state: &[f64]) -> Result<usize> {
        check_len("tabular state", 1, state.len())?;
        let raw = state[0];
        let index = raw.round();
        if !(index >= 0.0 && (index as usize) < values.len()) {
            return Err(Error::invalid(format!("state index {raw} outside a table of {}", values.len())));
        }
        Ok(index as usize)
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        check_finite("critic state", state)?;
        match self {
            Self::Tabular { values } => Ok(values[Self::table_index(values, state)?]),
            Self::Constant { value } => Ok(*value),
            Self::Mlp(net) => Ok(net.forward(state)?[0]),
        }
    }

    pub fn values(&self, states: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Self::Mlp(net) if !states.is_empty() => {
                Ok(net.evaluate_batch(states, Mode::Evaluation)?.into_iter().map(|o| o[0]).collect())
            }
            _ => states.iter().map(|s| self.value(s)).collect(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Self::Tabular { values } => values,
            Self::Constant { value } => std::slice::from_ref(value),
            Self::Mlp(net) => net.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Self::Tabular { values } => values,
            Self::Constant { value } => std::slice::from_mut(value),
            Self::Mlp(net) => net.params_mut(),
        }
    }

    /// `∇_v V̂(s)`.
    pub fn value_gradient(&self, state: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Tabular { values } => {
                let mut g = vec![0.0; values.len()];
                g[Self::table_index(values, state)?] = 1.0;
                Ok(g)
            }
            Self::Constant { .. } => Ok(vec![1.0]),
            Self::Mlp(net) => {
                let mut scratch = net.clone();
                scratch.forward_batch(&[state.to_vec()], Mode::Evaluation)?;
                scratch.backward(&[vec![1.0]])
            }
        }
    }

    /// Semi-gradient TD(0) step `v ← v + α·δ·∇V̂(s)`; returns `δ`.
    pub fn td_update(&mut self, transition: &Transition, gamma: f64, step_size: f64) -> Result<f64> {
        let delta = td_error(self, transition, gamma)?;
        let grad = self.value_gradient(&transition.state)?;
        check_finite("TD update", &grad)?;
        for (p, g) in self.params_mut().iter_mut().zip(&grad) {
            *p += step_size * delta * g;
        }
        Ok(delta)
    }

    /// One regression pass toward `targets` under the mean squared error.
    ///
    /// Tabular and constant critics are solved exactly (per-state mean of
    /// the targets; unvisited table entries keep their value). Networks take
    /// `adam_iterations` full-batch Adam steps.
    pub fn regress(
        &mut self,
        states: &[Vec<f64>],
        targets: &[f64],
        optimizer: &mut AdamState,
        adam_iterations: usize,
    ) -> Result<()> {
        check_len("regression targets", states.len(), targets.len())?;
        if states.is_empty() {
            return Err(Error::invalid("regression needs a non-empty batch"));
        }
        check_finite("regression targets", targets)?;
        match self {
            Self::Tabular { values } => {
                let mut sums = vec![0.0; values.len()];
                let mut counts = vec![0usize; values.len()];
                for (s, y) in states.iter().zip(targets) {
                    let i = Self::table_index(values, s)?;
                    sums[i] += y;
                    counts[i] += 1;
                }
                for ((v, s), c) in values.iter_mut().zip(&sums).zip(&counts) {
                    if *c > 0 {
                        *v = s / *c as f64;
                    }
                }
            }
            Self::Constant { value } => {
                *value = targets.iter().sum::<f64>() / targets.len() as f64;
            }
            Self::Mlp(net) => {
                let n = states.len() as f64;
                for _ in 0..adam_iterations {
                    let out = net.forward_batch(states, Mode::Training)?;
                    let upstream: Vec<Vec<f64>> =
                        out.iter().zip(targets).map(|(o, y)| vec![2.0 * (o[0] - y) / n]).collect();
                    let grad = net.backward(&upstream)?;
                    optimizer.step(net.params_mut(), &grad, StepDirection::Descent)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedIteration {
    pub gamma: f64,
    pub lambda: f64,
    /// Rounds of target recomputation (`K`).
    pub iterations: usize,
    /// Adam steps per regression pass for network critics.
    pub adam_iterations: usize,
}

/// `K` rounds of: recompute λ-return targets with the current critic, then
/// one regression pass toward them.
pub fn fitted_value_iteration(
    critic: &mut VCritic,
    batch: &[Trajectory],
    settings: FittedIteration,
    optimizer: &mut AdamState,
) -> Result<()> {
    if settings.iterations == 0 {
        return Err(Error::invalid("fitted value iteration needs at least one iteration"));
    }
    if batch.iter().all(Trajectory::is_empty) {
        return Err(Error::invalid("fitted value iteration needs a non-empty batch"));
    }
    let states: Vec<Vec<f64>> = batch.iter().flat_map(|t| t.states().cloned()).collect();
    for _ in 0..settings.iterations {
        let mut targets = Vec::with_capacity(states.len());
        for trajectory in batch.iter().filter(|t| !t.is_empty()) {
            targets.extend(lambda_returns(trajectory, critic, settings.gamma, settings.lambda)?.targets);
        }
        critic.regress(&states, &targets, optimizer, settings.adam_iterations)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, AdamConfig, MlpSpec};
    use crate::seeded_rng;

    fn chain_trajectory(len: usize) -> Trajectory {
        // s0 → s1 → s1 → ..., reward 1 in s0 and 2 in s1, cut at `len`.
        let mut t = Trajectory::new();
        let mut s = 0.0;
        for _ in 0..len {
            let r = if s == 0.0 { 1.0 } else { 2.0 };
            t.push(Transition {
                state: vec![s],
                action: vec![0.0],
                reward: r,
                next_state: vec![1.0],
                terminal: false,
            });
            s = 1.0;
        }
        t
    }

    #[test]
    fn tabular_fit_reaches_fixed_point() {
        let gamma = 0.5;
        // V(s1) = 2/(1−γ) = 4, V(s0) = 1 + γ·4 = 3
        let mut critic = VCritic::tabular(vec![0.0, 0.0]);
        let mut opt = AdamState::new(2, AdamConfig::default());
        let settings = FittedIteration {
            gamma,
            lambda: 0.5,
            iterations: 50,
            adam_iterations: 1,
        };
        fitted_value_iteration(&mut critic, &[chain_trajectory(30)], settings, &mut opt).unwrap();
        assert!((critic.value(&[0.0]).unwrap() - 3.0).abs() < 1e-6);
        assert!((critic.value(&[1.0]).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_iterations_and_empty_batch_rejected() {
        let mut critic = VCritic::constant(0.0);
        let mut opt = AdamState::new(1, AdamConfig::default());
        let mut settings = FittedIteration {
            gamma: 0.9,
            lambda: 0.9,
            iterations: 0,
            adam_iterations: 1,
        };
        assert!(fitted_value_iteration(&mut critic, &[chain_trajectory(3)], settings, &mut opt).is_err());
        settings.iterations = 1;
        assert!(fitted_value_iteration(&mut critic, &[], settings, &mut opt).is_err());
    }

    #[test]
    fn single_iteration_is_one_regression_pass() {
        let mut rng = seeded_rng(4);
        let net = MlpNet::new(MlpSpec::new(vec![1, 8, 1], Activation::LeakyRelu, Activation::Linear), &mut rng).unwrap();
        let batch = [chain_trajectory(10)];
        let settings = FittedIteration {
            gamma: 0.9,
            lambda: 0.9,
            iterations: 1,
            adam_iterations: 1,
        };
        let mut a = VCritic::mlp(net.clone()).unwrap();
        let mut opt_a = AdamState::new(net.n_params(), AdamConfig::default());
        fitted_value_iteration(&mut a, &batch, settings, &mut opt_a).unwrap();

        let mut b = VCritic::mlp(net.clone()).unwrap();
        let mut opt_b = AdamState::new(net.n_params(), AdamConfig::default());
        let targets = lambda_returns(&batch[0], &b, 0.9, 0.9).unwrap().targets;
        let states: Vec<Vec<f64>> = batch[0].states().cloned().collect();
        b.regress(&states, &targets, &mut opt_b, 1).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn monte_carlo_targets_do_not_move() {
        let mut t = chain_trajectory(4);
        t.transitions.last_mut().unwrap().terminal = true;
        let mut critic = VCritic::tabular(vec![0.0, 0.0]);
        let first = lambda_returns(&t, &critic, 0.9, 1.0).unwrap().targets;
        let mut opt = AdamState::new(2, AdamConfig::default());
        let states: Vec<Vec<f64>> = t.states().cloned().collect();
        critic.regress(&states, &first, &mut opt, 1).unwrap();
        let second = lambda_returns(&t, &critic, 0.9, 1.0).unwrap().targets;
        assert_eq!(first, second);
    }

    #[test]
    fn network_regression_reduces_error() {
        let mut rng = seeded_rng(8);
        let net = MlpNet::new(MlpSpec::new(vec![1, 16, 1], Activation::LeakyRelu, Activation::Linear), &mut rng).unwrap();
        let mut critic = VCritic::mlp(net).unwrap();
        let states: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0 - 1.0]).collect();
        let targets: Vec<f64> = states.iter().map(|s| 0.5 * s[0] + 0.2).collect();
        let mse = |c: &VCritic| {
            c.values(&states).unwrap().iter().zip(&targets).map(|(v, y)| (v - y).powi(2)).sum::<f64>()
        };
        let before = mse(&critic);
        let n = critic.params().len();
        let mut opt = AdamState::new(n, AdamConfig::new(1e-2));
        critic.regress(&states, &targets, &mut opt, 200).unwrap();
        assert!(mse(&critic) < 0.1 * before);
    }

    #[test]
    fn td_update_moves_toward_target() {
        let mut critic = VCritic::constant(0.0);
        let t = Transition {
            state: vec![0.0],
            action: vec![0.0],
            reward: 1.0,
            next_state: vec![0.0],
            terminal: true,
        };
        let delta = critic.td_update(&t, 0.9, 0.5).unwrap();
        assert_eq!(delta, 1.0);
        assert_eq!(critic.params(), &[0.5]);
    }
}
