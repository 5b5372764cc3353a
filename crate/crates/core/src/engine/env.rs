//! The environment the engine learns from: a fleet stepped one decision
//! period at a time under a service-to-class assignment.

use alloc::vec::Vec;

use super::density::DensityTracker;
use super::mdp::{Action, NetworkState};
use super::reward::{reward, ServiceObservation, StepSnapshot};
use crate::fleet::{encode_reading, Fleet};
use crate::model::{QosClassId, ScenarioConfig};
use crate::rng::{SeedStreams, StreamRng, CHURN};

pub trait Environment {
    fn num_services(&self) -> usize;
    fn state(&self) -> NetworkState;
    fn step(&mut self, action: Action) -> StepOutcome;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub next: NetworkState,
    pub snapshot: StepSnapshot,
}

/// Delay and loss a class delivers with `waiting` devices in its queue.
///
/// Delay is the mean staleness of a report (half a reporting interval past
/// the first cycle) plus the time to drain the queue at class capacity.
/// Every device beyond capacity costs one percent of loss.
pub fn class_response(config: &ScenarioConfig, class: QosClassId, waiting: u32) -> (f64, f64) {
    let q = config.qos_class(class);
    let staleness = config.cycle_ms * (q.reporting_interval_cycles as f64 - 1.0) / 2.0;
    let queueing = config.cycle_ms * waiting as f64 / q.service_capacity_per_cycle as f64;
    let excess = waiting.saturating_sub(q.service_capacity_per_cycle) as f64;
    (staleness + queueing, f64::min(1.0, 0.01 * excess))
}

/// Largest queue seen per class since the last reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueuePeak {
    peak: [u32; 2],
}

impl QueuePeak {
    pub fn observe(&mut self, fleet: &Fleet) {
        for c in QosClassId::ALL {
            self.peak[c.slot()] = self.peak[c.slot()].max(fleet.queued_in(c));
        }
    }

    pub fn get(&self, class: QosClassId) -> u32 {
        self.peak[class.slot()]
    }

    pub fn reset(&mut self) {
        self.peak = [0; 2];
    }
}

/// Per-service KPI check against the worst queue of the service's class.
pub fn observe_services(config: &ScenarioConfig, state: NetworkState, peak: &QueuePeak) -> Vec<ServiceObservation> {
    config
        .services
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let class = state.class_of(j);
            let (delay_ms, loss_rate) = class_response(config, class, peak.get(class));
            ServiceObservation {
                service: spec.id,
                delay_ms,
                loss_rate,
                satisfied: spec.meets(delay_ms, loss_rate),
            }
        })
        .collect()
}

/// A simulated fleet driven by assignment actions.
///
/// In frozen mode there is no churn, every node stays active and each step
/// starts from empty queues at cycle 0, which makes the reward a pure
/// function of the post-action assignment.
#[derive(Debug, Clone)]
pub struct FleetEnvironment {
    config: ScenarioConfig,
    fleet: Fleet,
    churn: StreamRng,
    frozen: bool,
    state: NetworkState,
    report_bytes: Vec<f64>,
    density: DensityTracker,
    cycle: u64,
    last: StepSnapshot,
}

impl FleetEnvironment {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self::build(config, false)
    }

    pub fn frozen(config: &ScenarioConfig) -> Self {
        Self::build(config, true)
    }

    fn build(config: &ScenarioConfig, frozen: bool) -> Self {
        let fleet = Fleet::spawn(config);
        let report_bytes = fleet
            .nodes()
            .iter()
            .map(|n| encode_reading(n, 0, n.baseline_reading).len() as f64)
            .collect();
        let state = NetworkState::all_sensitive(config.services.len());
        let mut env = FleetEnvironment {
            config: config.clone(),
            fleet,
            churn: SeedStreams::new(config.seed).stream(CHURN),
            frozen,
            state,
            report_bytes,
            density: DensityTracker::new(),
            cycle: 0,
            last: StepSnapshot {
                state,
                services: Vec::new(),
                drain_norm: 1.0,
            },
        };
        env.last.drain_norm = env.drain_norm();
        env
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn density(&self) -> &DensityTracker {
        &self.density
    }

    pub fn set_state(&mut self, state: NetworkState) {
        self.state = state;
        for (j, spec) in self.config.services.iter().enumerate() {
            self.fleet.assign(spec.id, state.class_of(j));
        }
    }

    /// Current payload rate over the rate with every active node
    /// delay-sensitive, weighting each node by the size of its report.
    pub fn drain_norm(&self) -> f64 {
        let mut current = 0.0;
        let mut all_sensitive = 0.0;
        for (node, &bytes) in self.fleet.nodes().iter().zip(&self.report_bytes) {
            if node.active {
                current += bytes / self.fleet.interval(node.qos) as f64;
                all_sensitive += bytes / self.fleet.interval(QosClassId::DelaySensitive) as f64;
            }
        }
        if all_sensitive > 0.0 {
            current / all_sensitive
        } else {
            1.0
        }
    }

    fn run_period(&mut self) -> QueuePeak {
        if self.frozen {
            self.fleet.clear_queues();
            self.cycle = 0;
        }
        let mut peak = QueuePeak::default();
        let mut due = Vec::new();
        for _ in 0..self.config.decision_period_cycles {
            if !self.frozen {
                self.fleet.churn(&mut self.churn, self.config.churn_probability);
            }
            due.clear();
            due.extend(self.fleet.due(self.cycle));
            for &id in &due {
                self.fleet.enqueue(id);
            }
            peak.observe(&self.fleet);
            self.density.recompute_on_change(&self.fleet);
            for c in QosClassId::ALL {
                self.fleet.serve(c);
            }
            self.cycle += 1;
        }
        peak
    }
}

impl Environment for FleetEnvironment {
    fn num_services(&self) -> usize {
        self.config.services.len()
    }

    fn state(&self) -> NetworkState {
        self.state
    }

    fn step(&mut self, action: Action) -> StepOutcome {
        let next = action.apply(self.state);
        self.set_state(next);
        let peak = self.run_period();
        let snapshot = StepSnapshot {
            state: next,
            services: observe_services(&self.config, next, &peak),
            drain_norm: self.drain_norm(),
        };
        let r = reward(&self.last, action, &snapshot, &self.config.reward);
        self.last = snapshot.clone();
        StepOutcome {
            reward: r,
            next,
            snapshot,
        }
    }
}
