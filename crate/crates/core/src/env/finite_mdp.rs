//! Tabular MDPs: the exact oracle's model and a sampling wrapper.

use std::path::Path;

use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, StepOutcome};
use crate::error::{check_finite, check_len};
use crate::{Error, Result};

/// `n` states, `k` actions, `P[s][a][s']`, `R[s][a]`, initial distribution `T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// Flattened `[s][a][s']`.
    transitions: Vec<f64>,
    /// Flattened `[s][a]`.
    rewards: Vec<f64>,
    initial: Vec<f64>,
    gamma: f64,
}

const INPUT_TOLERANCE: f64 = 1e-9;

fn normalize(row: &mut [f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!("{what}: probabilities must lie in [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOLERANCE {
        return Err(Error::invalid(format!("{what}: sums to {sum}, not 1")));
    }
    row.iter_mut().for_each(|p| *p /= sum);
    Ok(())
}

impl FiniteMdp {
    /// Rows of `transitions` and `initial` must sum to one within 1e-9; they
    /// are renormalized exactly on construction.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        mut transitions: Vec<f64>,
        rewards: Vec<f64>,
        mut initial: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("an MDP needs at least one state and one action"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1)")));
        }
        check_len("transition tensor", n_states * n_actions * n_states, transitions.len())?;
        check_len("reward matrix", n_states * n_actions, rewards.len())?;
        check_len("initial distribution", n_states, initial.len())?;
        check_finite("reward matrix", &rewards)?;
        for (i, row) in transitions.chunks_mut(n_states).enumerate() {
            normalize(row, &format!("P[{}][{}]", i / n_actions, i % n_actions))?;
        }
        normalize(&mut initial, "T0")?;
        Ok(Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            initial,
            gamma,
        })
    }

    /// Random MDP with uniform-then-normalized transition rows, rewards in
    /// `[−1, 1]` and a random initial distribution.
    pub fn random<R: Rng + ?Sized>(n_states: usize, n_actions: usize, gamma: f64, rng: &mut R) -> Result<Self> {
        let mut random_simplex = |len: usize| -> Vec<f64> {
            let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        };
        let mut transitions = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            transitions.extend(random_simplex(n_states));
        }
        let initial = random_simplex(n_states);
        let rewards = (0..n_states * n_actions)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Self::new(n_states, n_actions, transitions, rewards, initial, gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    /// Same model with every reward multiplied by `factor`.
    pub fn scale_rewards(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.rewards.iter_mut().for_each(|r| *r *= factor);
        out
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1)")));
        }
        let mut out = self.clone();
        out.gamma = gamma;
        Ok(out)
    }

    pub fn reset(&self, rng: &mut dyn RngCore) -> usize {
        sample_index(&self.initial, rng)
    }

    pub fn step(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> Result<(usize, f64)> {
        if s >= self.n_states || a >= self.n_actions {
            return Err(Error::invalid(format!("state {s} / action {a} out of range")));
        }
        Ok((sample_index(self.transition_row(s, a), rng), self.reward(s, a)))
    }

    /// Text form: header `n k gamma`, then the `n·k` rows of `P` (each `n`
    /// numbers, ordered by state then action), then `n` rows of `R` (each `k`
    /// numbers), then `T0`. Any whitespace separates numbers.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        let mut next_f64 = |what: &str| -> Result<f64> {
            let (line, tok) = tokens.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of input while reading {what}"),
            })?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{tok}` as {what}"),
            })
        };
        let n = next_f64("state count")?;
        let k = next_f64("action count")?;
        if n.fract() != 0.0 || k.fract() != 0.0 || n < 1.0 || k < 1.0 {
            return Err(Error::Parse {
                line: 1,
                msg: "state and action counts must be positive integers".into(),
            });
        }
        let (n, k) = (n as usize, k as usize);
        let gamma = next_f64("gamma")?;
        let transitions = (0..n * k * n)
            .map(|_| next_f64("transition probability"))
            .collect::<Result<Vec<_>>>()?;
        let rewards = (0..n * k).map(|_| next_f64("reward")).collect::<Result<Vec<_>>>()?;
        let initial = (0..n)
            .map(|_| next_f64("initial probability"))
            .collect::<Result<Vec<_>>>()?;
        if let Some((line, tok)) = tokens.next() {
            return Err(Error::Parse {
                line,
                msg: format!("trailing token `{tok}`"),
            });
        }
        Self::new(n, k, transitions, rewards, initial, gamma)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {:?}\n", self.n_states, self.n_actions, self.gamma);
        let join = |row: &[f64]| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
        for row in self.transitions.chunks(self.n_states) {
            out.push_str(&join(row));
            out.push('\n');
        }
        for row in self.rewards.chunks(self.n_actions) {
            out.push_str(&join(row));
            out.push('\n');
        }
        out.push_str(&join(&self.initial));
        out.push('\n');
        out
    }
}

fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver above the last cumulative sum
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Continuous-interface wrapper around a [`FiniteMdp`].
///
/// States are encoded as `[index]`, actions as `[index]` (rounded to the
/// nearest action). Episodes end with probability `1 − γ` after every step,
/// so the expected undiscounted return equals the discounted value `J`.
#[derive(Debug, Clone)]
pub struct FiniteMdpEnv {
    mdp: FiniteMdp,
    spec: EnvSpec,
    state: usize,
}

impl FiniteMdpEnv {
    pub fn new(mdp: FiniteMdp) -> Result<Self> {
        let high = (mdp.n_actions() as f64 - 1.0).max(0.5);
        let spec = EnvSpec::with_bounds(1, vec![0.0], vec![high], None, mdp.gamma())?;
        Ok(Self { mdp, spec, state: 0 })
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }
}

impl Environment for FiniteMdpEnv {
    fn fork(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }

    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.state = self.mdp.reset(rng);
        vec![self.state as f64]
    }

    fn step(&mut self, action: &[f64], rng: &mut dyn RngCore) -> Result<StepOutcome> {
        let action = self.spec.admit_action(action)?;
        let a = (action[0].round() as usize).min(self.mdp.n_actions() - 1);
        let (next, reward) = self.mdp.step(self.state, a, rng)?;
        self.state = next;
        let stop: f64 = rng.random();
        Ok(StepOutcome {
            next_state: vec![next as f64],
            reward,
            terminal: stop >= self.mdp.gamma(),
            truncated: false,
        })
    }
}
