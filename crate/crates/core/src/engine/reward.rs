use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mdp::{Action, NetworkState};
use crate::model::ServiceId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_kpi: f64,
    pub w_energy: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_kpi: 1.0,
            w_energy: 0.5,
        }
    }
}

/// KPI measurement for one service over a decision period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceObservation {
    pub service: ServiceId,
    pub delay_ms: f64,
    pub loss_rate: f64,
    pub satisfied: bool,
}

/// What the master nodes report after a decision period.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSnapshot {
    pub state: NetworkState,
    pub services: Vec<ServiceObservation>,
    /// Fleet drain rate relative to the all-delay-sensitive drain rate, in (0, 1].
    pub drain_norm: f64,
}

/// `w_kpi · Σ sat_j − w_energy · drain_norm`, scored on the post-action
/// snapshot. `sat_j` is +1 for a satisfied service and −1 otherwise.
pub fn reward(_prev: &StepSnapshot, _action: Action, next: &StepSnapshot, weights: &RewardWeights) -> f64 {
    let satisfaction: f64 = next
        .services
        .iter()
        .map(|s| if s.satisfied { 1.0 } else { -1.0 })
        .sum();
    weights.w_kpi * satisfaction - weights.w_energy * next.drain_norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn snapshot(sat: &[bool], drain_norm: f64) -> StepSnapshot {
        StepSnapshot {
            state: NetworkState::all_sensitive(sat.len()),
            services: sat
                .iter()
                .zip(ServiceId::ALL)
                .map(|(&satisfied, service)| ServiceObservation {
                    service,
                    delay_ms: 0.0,
                    loss_rate: 0.0,
                    satisfied,
                })
                .collect(),
            drain_norm,
        }
    }

    #[test]
    fn everything_satisfied() {
        let r = reward(&snapshot(&[true; 3], 1.0), Action::NoOp, &snapshot(&[true; 3], 0.4), &RewardWeights::default());
        assert!((r - 2.8).abs() < 1e-12);
    }

    #[test]
    fn one_service_missed() {
        let next = snapshot(&[true, true, false], 0.33);
        let r = reward(&next, Action::NoOp, &next, &RewardWeights::default());
        assert!((r - 0.835).abs() < 1e-12);
    }

    #[test]
    fn zero_weights() {
        let w = RewardWeights { w_kpi: 0.0, w_energy: 0.0 };
        for sat in [vec![true, false], vec![false, false, false]] {
            let s = snapshot(&sat, 0.7);
            assert_eq!(reward(&s, Action::NoOp, &s, &w), 0.0);
        }
    }
}
