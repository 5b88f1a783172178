//! Transitions gathered under the exploratory policy.

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// One episode. If the last transition is not terminal the episode was cut
/// at the horizon and its tail is bootstrapped from the critic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, transition: Transition) {
        self.transitions.push(transition);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Undiscounted sum of rewards.
    pub fn episode_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn ends_terminal(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.terminal)
    }

    pub fn states(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.transitions.iter().map(|t| &t.state)
    }
}
