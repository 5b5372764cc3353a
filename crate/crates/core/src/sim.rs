//! Cycle-level simulation of the whole stack: churning fleet, per-class
//! queues, battery drain and one or more gateways ingesting the same traffic.

use alloc::vec::Vec;

use crate::engine::{recommend, CandidateStore, DensityTracker, NetworkState, QosDensity, RunningDatastore};
use crate::error::EngineError;
use crate::fleet::{generate_traffic, Fleet, ReadingSource};
use crate::gateway::{Gateway, GatewayMode};
use crate::model::{QosClassId, ScenarioConfig};
use crate::rng::{SeedStreams, StreamRng, CHURN};

/// What the running datastore records every cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleObservation {
    pub cycle: u64,
    pub active: u32,
    pub queued: [u32; 2],
    pub density: [QosDensity; 2],
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: ScenarioConfig,
    fleet: Fleet,
    churn: StreamRng,
    readings: ReadingSource,
    gateways: Vec<Gateway>,
    density: DensityTracker,
    running: RunningDatastore<CycleObservation>,
    state: NetworkState,
    cycle: u64,
    window_cycles: u64,
}

impl Simulation {
    /// One gateway per entry of `modes`, all fed the same envelopes.
    pub fn new(config: &ScenarioConfig, modes: &[GatewayMode]) -> Self {
        let streams = SeedStreams::new(config.seed);
        let window_ms = config.datastore_window_x as f64 * 1000.0;
        Simulation {
            config: config.clone(),
            fleet: Fleet::spawn(config),
            churn: streams.stream(CHURN),
            readings: ReadingSource::new(&streams),
            gateways: modes.iter().map(|&m| Gateway::new(config, m)).collect(),
            density: DensityTracker::new(),
            running: RunningDatastore::new(config.datastore_window_x),
            state: NetworkState::all_sensitive(config.services.len()),
            cycle: 0,
            window_cycles: libm::ceil(window_ms / config.cycle_ms).max(1.0) as u64,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn gateways(&self) -> &[Gateway] {
        &self.gateways
    }

    pub fn gateway(&self, mode: GatewayMode) -> Option<&Gateway> {
        self.gateways.iter().find(|g| g.mode() == mode)
    }

    pub fn running(&self) -> &RunningDatastore<CycleObservation> {
        &self.running
    }

    pub fn state(&self) -> NetworkState {
        self.state
    }

    /// Next cycle to be simulated.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn set_state(&mut self, state: NetworkState) {
        self.state = state;
        for (j, spec) in self.config.services.iter().enumerate() {
            self.fleet.assign(spec.id, state.class_of(j));
        }
    }

    /// Advances one cycle: churn, emission (draining each sender's battery),
    /// ingest, observation, then service of each class queue.
    pub fn step(&mut self) {
        self.fleet.churn(&mut self.churn, self.config.churn_probability);
        let traffic = generate_traffic(&self.fleet, self.cycle, &mut self.readings);
        for envelope in &traffic {
            self.fleet.drain(envelope.source_id, envelope.payload.len() as u64, self.config.k_drain);
            self.fleet.enqueue(envelope.source_id);
            for gw in &mut self.gateways {
                // Rejections are counted by the gateway.
                let _ = gw.ingest(envelope, self.cycle);
            }
        }
        let density = self.density.recompute_on_change(&self.fleet);
        let observation = CycleObservation {
            cycle: self.cycle,
            active: self.fleet.active_count(),
            queued: QosClassId::ALL.map(|c| self.fleet.queued_in(c)),
            density,
        };
        self.running.push(self.cycle as f64 * self.config.cycle_ms, observation);
        for c in QosClassId::ALL {
            self.fleet.serve(c);
        }
        self.cycle += 1;
        if self.cycle % self.window_cycles == 0 {
            let keep_from = self.cycle - self.window_cycles;
            for gw in &mut self.gateways {
                gw.pool_mut().compact_before(keep_from);
            }
        }
    }

    pub fn run(&mut self, cycles: u64) {
        for _ in 0..cycles {
            self.step();
        }
    }

    /// Runs `cycles` cycles, consulting the candidate store at the start of
    /// every decision period and applying its recommendation.
    pub fn run_with_policy(&mut self, candidate: &CandidateStore, cycles: u64) -> Result<(), EngineError> {
        let period = self.config.decision_period_cycles as u64;
        for _ in 0..cycles {
            if self.cycle % period == 0 {
                let action = recommend(candidate, self.state)?;
                self.set_state(action.apply(self.state));
            }
            self.step();
        }
        Ok(())
    }

    /// Mean remaining lifetime fraction of the nodes whose service's KPIs
    /// call for `class`, or `None` if no service does.
    pub fn mean_lifetime_fraction(&self, class: QosClassId) -> Option<f64> {
        let (sum, count) = self
            .fleet
            .nodes()
            .iter()
            .filter(|n| {
                self.config
                    .service(n.service)
                    .is_some_and(|s| self.config.required_class(s) == class)
            })
            .fold((0.0, 0u32), |(s, c), n| (s + n.lifetime_fraction, c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_training, FleetEnvironment, TrainingConfig};
    use crate::model::{build_scenario, ServiceId};

    #[test]
    fn zero_cycles_leaves_full_batteries() {
        let cfg = build_scenario(&ServiceId::ALL, 50, 0).unwrap();
        let sim = Simulation::new(&cfg, &[GatewayMode::Baseline]);
        for c in QosClassId::ALL {
            assert_eq!(sim.mean_lifetime_fraction(c), Some(1.0));
        }
    }

    #[test]
    fn lifetime_never_increases() {
        let cfg = build_scenario(&ServiceId::ALL, 30, 1).unwrap();
        let mut sim = Simulation::new(&cfg, &[GatewayMode::Qcsm]);
        let mut prev: Vec<f64> = sim.fleet().nodes().iter().map(|n| n.lifetime_fraction).collect();
        for _ in 0..300 {
            sim.step();
            for (n, p) in sim.fleet().nodes().iter().zip(&mut prev) {
                assert!(n.lifetime_fraction <= *p);
                assert!(n.lifetime_fraction > 0.0 || !n.active);
                *p = n.lifetime_fraction;
            }
        }
    }

    #[test]
    fn drained_bytes_match_lifetime_loss() {
        let cfg = build_scenario(&ServiceId::ALL, 30, 1).unwrap();
        let mut sim = Simulation::new(&cfg, &[]);
        sim.run(500);
        for n in sim.fleet().nodes() {
            let implied = (1.0 - n.lifetime_fraction) / cfg.k_drain;
            assert!((implied - n.drained_bytes as f64).abs() <= 1e-6 * n.drained_bytes as f64 + 1e-6);
        }
    }

    #[test]
    fn pools_stay_within_window() {
        let cfg = build_scenario(&ServiceId::ALL, 20, 0).unwrap();
        let mut sim = Simulation::new(&cfg, &[GatewayMode::Qcsm, GatewayMode::Baseline]);
        sim.run(1500);
        for gw in sim.gateways() {
            let oldest = gw.pool().records()[0].ingested_cycle;
            assert!(oldest + 2 * 600 >= sim.cycle());
            assert_eq!(gw.rejected(), 0);
        }
        assert!(sim.running().oldest_ms().unwrap() >= (sim.cycle() - 1) as f64 * 100.0 - 60_000.0);
    }

    #[test]
    fn untrained_policy_is_reported() {
        let cfg = build_scenario(&ServiceId::ALL, 20, 0).unwrap();
        let mut sim = Simulation::new(&cfg, &[]);
        assert_eq!(sim.run_with_policy(&CandidateStore::new(), 10), Err(EngineError::NotTrained));
    }

    #[test]
    fn trained_policy_moves_tolerant_services() {
        let cfg = build_scenario(&ServiceId::ALL, 50, 0).unwrap();
        let out = run_training(&mut FleetEnvironment::new(&cfg), &TrainingConfig::new(50_000, 0.07, 0.99, 0)).unwrap();
        let mut sim = Simulation::new(&cfg, &[GatewayMode::Qcsm]);
        sim.run_with_policy(&out.candidate, 200).unwrap();
        let tolerant: Vec<_> = sim.state().classes();
        assert_eq!(tolerant[0], QosClassId::DelayTolerant, "{:?}", sim.state());
        assert_eq!(tolerant[1], QosClassId::DelayTolerant);
        assert_eq!(tolerant[2], QosClassId::DelaySensitive);
    }
}
