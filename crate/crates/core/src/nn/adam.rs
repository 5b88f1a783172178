//! Adam with bias correction.

use crate::error::{check_finite, check_len};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(step_size: f64) -> Self {
        Self {
            step_size,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    /// `(β1, β2, ε) = (0, 0.999, 1e-8)`, the setting used for both actor and
    /// critic in the PeNFAC experiments.
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            beta1: 0.0,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDirection {
    /// θ ← θ − α·m̂/(√v̂ + ε): minimize.
    Descent,
    /// θ ← θ + α·m̂/(√v̂ + ε): the gradient is an ascent direction.
    Ascent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn reset(&mut self) {
        self.first_moment.iter_mut().for_each(|m| *m = 0.0);
        self.second_moment.iter_mut().for_each(|v| *v = 0.0);
        self.steps = 0;
    }

    /// Applies one Adam step in place. A non-finite gradient is rejected
    /// before any state is touched.
    pub fn step(
        &mut self,
        params: &mut [f64],
        gradient: &[f64],
        direction: StepDirection,
    ) -> Result<()> {
        check_len("adam params", self.first_moment.len(), params.len())?;
        check_len("adam gradient", self.first_moment.len(), gradient.len())?;
        check_finite("adam gradient", gradient)?;

        let AdamConfig {
            step_size,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.steps += 1;
        let t = self.steps as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        let sign = match direction {
            StepDirection::Descent => -1.0,
            StepDirection::Ascent => 1.0,
        };

        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(gradient)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p += sign * step_size * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}
