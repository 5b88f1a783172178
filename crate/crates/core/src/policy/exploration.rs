//! Isotropic Gaussian exploration truncated to the action box.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::DeterministicPolicy;
use crate::{Error, Result};

/// Per-coordinate resampling cap before falling back to clipping.
pub const MAX_TRUNCATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSchedule {
    Constant,
    /// `σ_k = max(σ_0·decay^k, floor)` after `k` calls to `anneal`.
    Exponential { decay: f64, floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianExploration {
    initial_sigma: f64,
    sigma: f64,
    schedule: SigmaSchedule,
    annealed: u64,
}

impl GaussianExploration {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_schedule(sigma, SigmaSchedule::Constant)
    }

    pub fn with_schedule(sigma: f64, schedule: SigmaSchedule) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("exploration σ must be positive, got {sigma}")));
        }
        if let SigmaSchedule::Exponential { decay, floor } = schedule {
            if !(decay > 0.0 && decay <= 1.0) || !(floor > 0.0) {
                return Err(Error::invalid("σ decay must lie in (0, 1] with a positive floor"));
            }
        }
        Ok(Self {
            initial_sigma: sigma,
            sigma,
            schedule,
            annealed: 0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn schedule(&self) -> SigmaSchedule {
        self.schedule
    }

    /// Advances the schedule by one tick (one episode in the agents).
    pub fn anneal(&mut self) {
        self.annealed += 1;
        if let SigmaSchedule::Exponential { decay, floor } = self.schedule {
            self.sigma = (self.initial_sigma * decay.powf(self.annealed as f64)).max(floor.min(self.initial_sigma));
        }
    }

    /// Draws `a ~ N(mean, σ²I)` restricted to `[low, high]` coordinate-wise.
    ///
    /// The box truncation of an isotropic Gaussian factorizes, so each
    /// coordinate is resampled independently.
    pub fn sample_around(&self, mean: &[f64], low: &[f64], high: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        mean.iter()
            .zip(low.iter().zip(high))
            .map(|(&mu, (&lo, &hi))| {
                for _ in 0..MAX_TRUNCATION_ATTEMPTS {
                    let z: f64 = StandardNormal.sample(rng);
                    let a = mu + self.sigma * z;
                    if a >= lo && a <= hi {
                        return a;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                (mu + self.sigma * z).clamp(lo, hi)
            })
            .collect()
    }

    /// Exploratory action from `π_{θ,σ}(·|s)`.
    pub fn act(&self, policy: &DeterministicPolicy, state: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let mean = policy.act(state)?;
        let (low, high) = policy.bounds();
        Ok(self.sample_around(&mean, low, high, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn vanishing_noise_returns_mean() {
        let e = GaussianExploration::new(1e-12).unwrap();
        let p = DeterministicPolicy::direct(vec![0.42, -0.1], 1);
        let a = e.act(&p, &[0.0], &mut seeded_rng(1)).unwrap();
        assert!((a[0] - 0.42).abs() < 1e-9 && (a[1] + 0.1).abs() < 1e-9);
    }

    #[test]
    fn moments_match_at_centre() {
        let e = GaussianExploration::new(0.2).unwrap();
        let mut rng = seeded_rng(7);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| e.sample_around(&[0.0], &[-1.0], &[1.0], &mut rng)[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var.sqrt() - 0.2).abs() < 0.01, "std {}", var.sqrt());
    }

    #[test]
    fn samples_respect_bounds_near_edge() {
        let e = GaussianExploration::new(0.45).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..20_000 {
            let a = e.sample_around(&[0.99], &[-1.0], &[1.0], &mut rng)[0];
            assert!(a <= 1.0 && a >= -1.0);
        }
    }

    #[test]
    fn same_stream_is_reproducible() {
        let e = GaussianExploration::new(0.3).unwrap();
        let draw = || {
            let mut rng = seeded_rng(5);
            (0..10).map(|_| e.sample_around(&[0.1, 0.2], &[-1.0; 2], &[1.0; 2], &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn annealing_is_monotone() {
        let mut e = GaussianExploration::with_schedule(0.5, SigmaSchedule::Exponential { decay: 0.99, floor: 0.05 }).unwrap();
        let mut last = e.sigma();
        for _ in 0..1000 {
            e.anneal();
            assert!(e.sigma() <= last);
            assert!(e.sigma() > 0.0);
            last = e.sigma();
        }
        assert!((last - 0.05).abs() < 1e-12);
        let mut c = GaussianExploration::new(0.3).unwrap();
        c.anneal();
        assert_eq!(c.sigma(), 0.3);
    }

    #[test]
    fn non_positive_sigma_rejected() {
        assert!(GaussianExploration::new(0.0).is_err());
        assert!(GaussianExploration::new(-1.0).is_err());
    }
}
