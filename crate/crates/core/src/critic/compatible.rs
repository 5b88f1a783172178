//! Q critic on compatible features `Q̂(s,a) = (a−μ(s))ᵀ∇_θμ(s)·w + V̂(s)`.

use nalgebra::{DMatrix, DVector};

use super::VCritic;
use crate::error::check_len;
use crate::policy::DeterministicPolicy;
use crate::{Error, Result};

/// Ridge added to the normal equations of [`CompatibleQCritic::fit`].
pub const COMPATIBLE_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleQCritic {
    pub w: Vec<f64>,
    pub baseline: VCritic,
}

impl CompatibleQCritic {
    pub fn new(n_policy_params: usize, baseline: VCritic) -> Self {
        Self {
            w: vec![0.0; n_policy_params],
            baseline,
        }
    }

    /// `∇_θμ(s)ᵀ(a − μ(s))`, one entry per policy parameter.
    pub fn features(&self, policy: &DeterministicPolicy, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        check_len("compatible features", self.w.len(), policy.n_params())?;
        let mu = policy.act(state)?;
        check_len("action", mu.len(), action.len())?;
        let diff: Vec<f64> = action.iter().zip(&mu).map(|(a, m)| a - m).collect();
        policy.weighted_jacobian_product(state, &diff)
    }

    /// `Q̂(s,a) − V̂(s)`.
    pub fn advantage(&self, policy: &DeterministicPolicy, state: &[f64], action: &[f64]) -> Result<f64> {
        let phi = self.features(policy, state, action)?;
        Ok(phi.iter().zip(&self.w).map(|(f, w)| f * w).sum())
    }

    pub fn q_value(&self, policy: &DeterministicPolicy, state: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.advantage(policy, state, action)? + self.baseline.value(state)?)
    }

    /// `∇_a Q̂(s,a) = ∇_θμ(s)·w`, independent of `a`.
    pub fn grad_a(&self, policy: &DeterministicPolicy, state: &[f64]) -> Result<Vec<f64>> {
        check_len("compatible weights", policy.n_params(), self.w.len())?;
        let jac = policy.jacobian(state)?;
        Ok(jac
            .iter()
            .map(|row| row.iter().zip(&self.w).map(|(j, w)| j * w).sum())
            .collect())
    }

    /// Stochastic-gradient step on `(target − Q̂)²/2`; returns the residual.
    pub fn sgd_update(
        &mut self,
        policy: &DeterministicPolicy,
        state: &[f64],
        action: &[f64],
        target: f64,
        w_step: f64,
        v_step: f64,
    ) -> Result<f64> {
        let phi = self.features(policy, state, action)?;
        let q: f64 = phi.iter().zip(&self.w).map(|(f, w)| f * w).sum::<f64>() + self.baseline.value(state)?;
        let residual = target - q;
        let v_grad = self.baseline.value_gradient(state)?;
        for (w, f) in self.w.iter_mut().zip(&phi) {
            *w += w_step * residual * f;
        }
        for (v, g) in self.baseline.params_mut().iter_mut().zip(&v_grad) {
            *v += v_step * residual * g;
        }
        Ok(residual)
    }

    /// Ridge least squares on features `(φ, 1)`. A constant baseline is
    /// fitted jointly with `w`; any other baseline is held fixed and `w` is
    /// fitted to the residual targets.
    pub fn fit(
        &mut self,
        policy: &DeterministicPolicy,
        states: &[Vec<f64>],
        actions: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<()> {
        check_len("compatible fit actions", states.len(), actions.len())?;
        check_len("compatible fit targets", states.len(), targets.len())?;
        if states.is_empty() {
            return Err(Error::invalid("compatible fit needs a non-empty batch"));
        }
        let joint = matches!(self.baseline, VCritic::Constant { .. });
        let p = self.w.len();
        let cols = if joint { p + 1 } else { p };
        let mut design = DMatrix::zeros(states.len(), cols);
        let mut y = DVector::zeros(states.len());
        for (row, ((s, a), t)) in states.iter().zip(actions).zip(targets).enumerate() {
            let phi = self.features(policy, s, a)?;
            for (j, f) in phi.iter().enumerate() {
                design[(row, j)] = *f;
            }
            if joint {
                design[(row, p)] = 1.0;
                y[row] = *t;
            } else {
                y[row] = t - self.baseline.value(s)?;
            }
        }
        let mut normal = design.transpose() * &design;
        for i in 0..cols {
            normal[(i, i)] += COMPATIBLE_RIDGE;
        }
        let rhs = design.transpose() * y;
        let solution = normal.cholesky().ok_or(Error::Singular)?.solve(&rhs);
        self.w.copy_from_slice(&solution.as_slice()[..p]);
        if joint {
            self.baseline.params_mut()[0] = solution[p];
        }
        Ok(())
    }
}
