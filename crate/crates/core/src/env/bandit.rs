//! Single-state quadratic bandits with a controllable action dimension.

use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, StepOutcome};
use crate::{seeded_rng, Error, Result};

/// One state, horizon one, reward `−‖a − a*‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBandit {
    spec: EnvSpec,
    target: Vec<f64>,
}

/// Half-width of the box the optimum is drawn from.
pub const TARGET_RANGE: f64 = 0.8;

impl QuadraticBandit {
    pub fn new(target: Vec<f64>) -> Result<Self> {
        if target.iter().any(|t| !(-1.0..=1.0).contains(t)) {
            return Err(Error::invalid("bandit target must lie in [-1, 1]"));
        }
        let spec = EnvSpec::new(1, target.len(), Some(1), 0.0)?;
        Ok(Self { spec, target })
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn action_dim(&self) -> usize {
        self.target.len()
    }

    /// The single state.
    pub fn state(&self) -> Vec<f64> {
        vec![0.0]
    }

    pub fn reward(&self, action: &[f64]) -> f64 {
        -action
            .iter()
            .zip(&self.target)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
    }
}

/// Bandit of dimension `m` with optimum uniform in `[−0.8, 0.8]^m`.
pub fn make_quadratic_bandit(m: usize, seed: u64) -> Result<QuadraticBandit> {
    if m == 0 {
        return Err(Error::invalid("bandit dimension must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let target = (0..m)
        .map(|_| rng.random_range(-TARGET_RANGE..=TARGET_RANGE))
        .collect();
    QuadraticBandit::new(target)
}

impl Environment for QuadraticBandit {
    fn fork(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }

    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.state()
    }

    fn step(&mut self, action: &[f64], _rng: &mut dyn RngCore) -> Result<StepOutcome> {
        let action = self.spec.admit_action(action)?;
        Ok(StepOutcome {
            next_state: self.state(),
            reward: self.reward(&action),
            terminal: true,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_gives_single_state() {
        let mut b = make_quadratic_bandit(3, 1).unwrap();
        assert_eq!(b.reset(&mut seeded_rng(0)), vec![0.0]);
    }

    #[test]
    fn optimum_has_zero_reward_and_terminates() {
        let mut b = QuadraticBandit::new(vec![0.5]).unwrap();
        let out = b.step(&[0.5], &mut seeded_rng(0)).unwrap();
        assert_eq!(out.reward, 0.0);
        assert!(out.terminal);
    }

    #[test]
    fn two_dimensional_reward() {
        let mut b = QuadraticBandit::new(vec![0.0, 0.0]).unwrap();
        let out = b.step(&[0.3, 0.4], &mut seeded_rng(0)).unwrap();
        assert!((out.reward + 0.25).abs() < 1e-15);
    }

    #[test]
    fn dimension_is_controlled_and_seed_reproducible() {
        assert_eq!(make_quadratic_bandit(5, 3).unwrap().spec().action_dim, 5);
        assert_eq!(make_quadratic_bandit(50, 3).unwrap().spec().action_dim, 50);
        let a = make_quadratic_bandit(50, 9).unwrap();
        let b = make_quadratic_bandit(50, 9).unwrap();
        assert_eq!(a.target(), b.target());
        assert!(a.target().iter().all(|t| t.abs() <= TARGET_RANGE));
    }

    #[test]
    fn non_finite_action_rejected() {
        let mut b = QuadraticBandit::new(vec![0.0]).unwrap();
        assert!(b.step(&[f64::NAN], &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn grid_search_finds_unique_maximum() {
        for target in [vec![0.37], vec![-0.55, 0.12]] {
            let b = QuadraticBandit::new(target.clone()).unwrap();
            let grid: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
            let mut best = (f64::NEG_INFINITY, vec![]);
            let mut count_best = 0;
            let mut visit = |a: Vec<f64>| {
                let r = b.reward(&a);
                if r > best.0 + 1e-12 {
                    best = (r, a);
                    count_best = 1;
                } else if (r - best.0).abs() <= 1e-12 {
                    count_best += 1;
                }
            };
            if target.len() == 1 {
                grid.iter().for_each(|&x| visit(vec![x]));
            } else {
                for &x in &grid {
                    for &y in &grid {
                        visit(vec![x, y]);
                    }
                }
            }
            assert_eq!(count_best, 1);
            for (a, t) in best.1.iter().zip(&target) {
                assert!((a - t).abs() < 0.005 + 1e-9);
            }
        }
    }
}
