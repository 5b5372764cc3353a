use alloc::vec;
use alloc::vec::Vec;

use crate::error::ContractViolation;

/// Dense state-by-action value table with per-cell visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        QTable {
            states,
            actions,
            values: vec![0.0; states * actions],
            visits: vec![0; states * actions],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.actions + a] = value;
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, lowest index on ties.
    pub fn argmax(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One Q-learning step on cell `(s, a)`. Returns the new value.
pub fn bellman_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    s_next: usize,
    lr: f64,
    gamma: f64,
) -> Result<f64, ContractViolation> {
    if !(0.0..=1.0).contains(&lr) {
        return Err(ContractViolation("learning rate must lie in [0, 1]"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(ContractViolation("discount factor must lie in [0, 1)"));
    }
    if !reward.is_finite() {
        return Err(ContractViolation("reward must be finite"));
    }
    let current = q.get(s, a);
    let target = reward + gamma * q.max(s_next);
    let updated = current + lr * (target - current);
    let cell = s * q.actions + a;
    q.values[cell] = updated;
    q.visits[cell] += 1;
    Ok(updated)
}
