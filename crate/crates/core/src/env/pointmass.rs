//! One-dimensional point mass driven toward a goal position.

use rand::RngCore;

use super::{EnvSpec, Environment, StepOutcome};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PointMassParams {
    pub dt: f64,
    pub goal: f64,
    pub force_gain: f64,
    pub damping: f64,
    pub position_limit: f64,
    pub velocity_limit: f64,
    pub action_cost: f64,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for PointMassParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            goal: 1.0,
            force_gain: 1.0,
            damping: 0.5,
            position_limit: 2.0,
            velocity_limit: 2.0,
            action_cost: 0.01,
            horizon: 100,
            gamma: 0.99,
        }
    }
}

/// State `(position, velocity)`, starting at rest at the origin.
///
/// Dynamics: `p' = clip(p + dt·v)`, `v' = clip(v + dt·(gain·a − damping·v))`;
/// reward `−(p − goal)² − cost·‖a‖²` evaluated on the pre-step state.
#[derive(Debug, Clone)]
pub struct PointMass {
    params: PointMassParams,
    spec: EnvSpec,
    state: [f64; 2],
    t: usize,
}

impl PointMass {
    pub fn new(params: PointMassParams) -> Result<Self> {
        let spec = EnvSpec::new(2, 1, Some(params.horizon), params.gamma)?;
        Ok(Self {
            params,
            spec,
            state: [0.0, 0.0],
            t: 0,
        })
    }

    pub fn params(&self) -> &PointMassParams {
        &self.params
    }

    pub fn state(&self) -> [f64; 2] {
        self.state
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new(PointMassParams::default()).expect("default parameters are valid")
    }
}

impl Environment for PointMass {
    fn fork(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }

    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.state = [0.0, 0.0];
        self.t = 0;
        self.state.to_vec()
    }

    fn step(&mut self, action: &[f64], _rng: &mut dyn RngCore) -> Result<StepOutcome> {
        let action = self.spec.admit_action(action)?;
        let p = &self.params;
        let [pos, vel] = self.state;
        let a = action[0];
        let reward = -(pos - p.goal).powi(2) - p.action_cost * a * a;
        let pos_next = (pos + p.dt * vel).clamp(-p.position_limit, p.position_limit);
        let vel_next = (vel + p.dt * (p.force_gain * a - p.damping * vel))
            .clamp(-p.velocity_limit, p.velocity_limit);
        self.state = [pos_next, vel_next];
        self.t += 1;
        Ok(StepOutcome {
            next_state: self.state.to_vec(),
            reward,
            terminal: false,
            truncated: self.t >= p.horizon,
        })
    }
}
