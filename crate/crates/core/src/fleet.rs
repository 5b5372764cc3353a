//! The sensor layer: battery-powered constrained devices, their churn, the
//! per-class waiting queues in front of the gateway and the traffic they emit.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codec::encode_cbor;
use crate::gateway::Envelope;
use crate::model::{DeviceClass, DeviceTier, Encoding, Protocol, QosClassId, ScenarioConfig, ServiceId};
use crate::rng::{SeedStreams, StreamRng, FLEET, TRAFFIC};

/// Lifetime of a fresh device, in years.
pub const MAX_LIFETIME_YEARS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    pub id: u32,
    pub device_class: DeviceClass,
    pub service: ServiceId,
    pub protocol: Protocol,
    pub is_master: bool,
    /// Remaining battery, 1.0 = [`MAX_LIFETIME_YEARS`].
    pub lifetime_fraction: f64,
    /// Total payload bytes charged against the battery so far.
    pub drained_bytes: u64,
    pub active: bool,
    /// QoS class the node's service is currently assigned to.
    pub qos: QosClassId,
    pub queued_for: Option<QosClassId>,
    /// Mean of the quantity this sensor measures.
    pub baseline_reading: f64,
}

impl SensorNode {
    /// Charges `bytes` against the battery under the linear drain model.
    ///
    /// The fraction is recomputed from the cumulative byte count, so the
    /// model is exactly additive: two drains of `b` equal one drain of `2b`.
    /// A node whose battery reaches zero goes inactive for good.
    pub fn drain(&mut self, bytes: u64, k_drain: f64) {
        self.drained_bytes = self.drained_bytes.saturating_add(bytes);
        let fraction = 1.0 - k_drain * self.drained_bytes as f64;
        self.lifetime_fraction = if fraction > 0.0 { fraction } else { 0.0 };
        if self.lifetime_fraction == 0.0 {
            self.active = false;
        }
    }

    pub fn remaining_lifetime_years(&self) -> f64 {
        MAX_LIFETIME_YEARS * self.lifetime_fraction
    }

    pub fn is_depleted(&self) -> bool {
        self.lifetime_fraction == 0.0
    }

    /// Reports are staggered by node id so a class does not burst.
    pub fn is_due(&self, cycle: u64, interval_cycles: u32) -> bool {
        self.active && (cycle + self.id as u64) % interval_cycles as u64 == 0
    }
}

pub fn remaining_lifetime_years(node: &SensorNode) -> f64 {
    node.remaining_lifetime_years()
}

/// A population of sensors plus the per-class queues in front of the gateway.
///
/// `active_per_class` (O_i) and `queued_per_class` (V_i) are maintained
/// incrementally by every mutating method.
#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    nodes: Vec<SensorNode>,
    services: Vec<(ServiceId, Protocol)>,
    intervals: [u32; 2],
    capacities: [u32; 2],
    active_per_class: [u32; 2],
    queued_per_class: [u32; 2],
    queues: [VecDeque<u32>; 2],
}

impl Fleet {
    /// Spawns `num_sensors` devices: tiers round-robin over Class0..Class2,
    /// services round-robin over the scenario's services, node `j` the master
    /// of service `j`. Every service starts delay-sensitive.
    pub fn spawn(config: &ScenarioConfig) -> Fleet {
        let mut rng = SeedStreams::new(config.seed).stream(FLEET);
        let services: Vec<_> = config.services.iter().map(|s| (s.id, s.protocol)).collect();
        let nodes: Vec<SensorNode> = (0..config.num_sensors)
            .map(|i| {
                let (service, protocol) = services[i as usize % services.len()];
                SensorNode {
                    id: i,
                    device_class: config.payload_caps.device_class(DeviceTier::ALL[i as usize % 3]),
                    service,
                    protocol,
                    is_master: (i as usize) < services.len(),
                    lifetime_fraction: 1.0,
                    drained_bytes: 0,
                    active: true,
                    qos: QosClassId::DelaySensitive,
                    queued_for: None,
                    baseline_reading: round2(rng.random_range(0.0..100.0)),
                }
            })
            .collect();
        let n = nodes.len() as u32;
        let q = config.qos_classes;
        Fleet {
            nodes,
            services,
            intervals: [
                q.delay_sensitive.reporting_interval_cycles,
                q.delay_tolerant.reporting_interval_cycles,
            ],
            capacities: [
                q.delay_sensitive.service_capacity_per_cycle,
                q.delay_tolerant.service_capacity_per_cycle,
            ],
            active_per_class: [n, 0],
            queued_per_class: [0, 0],
            queues: [VecDeque::new(), VecDeque::new()],
        }
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &SensorNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn services(&self) -> impl Iterator<Item = ServiceId> + '_ {
        self.services.iter().map(|&(s, _)| s)
    }

    pub fn interval(&self, class: QosClassId) -> u32 {
        self.intervals[class.slot()]
    }

    pub fn capacity(&self, class: QosClassId) -> u32 {
        self.capacities[class.slot()]
    }

    /// O_i: active devices assigned to `class`.
    pub fn active_in(&self, class: QosClassId) -> u32 {
        self.active_per_class[class.slot()]
    }

    /// V_i: active devices waiting in the `class` queue.
    pub fn queued_in(&self, class: QosClassId) -> u32 {
        self.queued_per_class[class.slot()]
    }

    /// m: number of active devices.
    pub fn active_count(&self) -> u32 {
        self.active_per_class[0] + self.active_per_class[1]
    }

    pub fn class_of(&self, service: ServiceId) -> Option<QosClassId> {
        self.nodes.iter().find(|n| n.service == service).map(|n| n.qos)
    }

    /// Moves every node of `service` to `class`. Waiting nodes keep their
    /// place in line but move to the new class's queue.
    pub fn assign(&mut self, service: ServiceId, class: QosClassId) {
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if node.service != service || node.qos == class {
                continue;
            }
            let (old, active, waiting) = (node.qos, node.active, node.queued_for.is_some());
            if waiting {
                self.dequeue(i as u32);
            }
            self.nodes[i].qos = class;
            if active {
                self.active_per_class[old.slot()] -= 1;
                self.active_per_class[class.slot()] += 1;
            }
            if waiting {
                self.enqueue(i as u32);
            }
        }
    }

    pub fn set_active(&mut self, id: u32, active: bool) {
        let node = &self.nodes[id as usize];
        if node.active == active || (active && node.is_depleted()) {
            return;
        }
        let slot = node.qos.slot();
        if active {
            self.active_per_class[slot] += 1;
        } else {
            if node.queued_for.is_some() {
                self.dequeue(id);
            }
            self.active_per_class[slot] -= 1;
        }
        self.nodes[id as usize].active = active;
    }

    /// Each non-master node with battery left toggles its activity with
    /// probability `p`. One draw per eligible node per call, in id order.
    /// Returns the number of toggles.
    pub fn churn(&mut self, rng: &mut StreamRng, p: f64) -> u32 {
        let mut toggles = 0;
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if node.is_master || node.is_depleted() {
                continue;
            }
            if rng.random::<f64>() < p {
                let next = !node.active;
                self.set_active(i as u32, next);
                toggles += 1;
            }
        }
        toggles
    }

    /// Ids of nodes whose report falls due in `cycle`.
    pub fn due(&self, cycle: u64) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .filter(move |n| n.is_due(cycle, self.intervals[n.qos.slot()]))
            .map(|n| n.id)
    }

    /// Puts an active node in line for its class. A node already waiting
    /// keeps its place; its newer report supersedes the pending one.
    pub fn enqueue(&mut self, id: u32) -> bool {
        let node = &mut self.nodes[id as usize];
        if !node.active || node.queued_for.is_some() {
            return false;
        }
        let class = node.qos;
        node.queued_for = Some(class);
        self.queues[class.slot()].push_back(id);
        self.queued_per_class[class.slot()] += 1;
        true
    }

    fn dequeue(&mut self, id: u32) {
        if let Some(class) = self.nodes[id as usize].queued_for.take() {
            let q = &mut self.queues[class.slot()];
            if let Some(pos) = q.iter().position(|&x| x == id) {
                q.remove(pos);
            }
            self.queued_per_class[class.slot()] -= 1;
        }
    }

    /// Acknowledges up to the class capacity of waiting nodes, oldest first.
    pub fn serve(&mut self, class: QosClassId) -> u32 {
        let cap = self.capacities[class.slot()];
        let mut served = 0;
        while served < cap {
            let Some(id) = self.queues[class.slot()].pop_front() else {
                break;
            };
            self.nodes[id as usize].queued_for = None;
            self.queued_per_class[class.slot()] -= 1;
            served += 1;
        }
        served
    }

    pub fn clear_queues(&mut self) {
        for class in QosClassId::ALL {
            while let Some(id) = self.queues[class.slot()].pop_front() {
                self.nodes[id as usize].queued_for = None;
            }
            self.queued_per_class[class.slot()] = 0;
        }
    }

    /// Drains a node's battery, keeping the class counters consistent when
    /// the node dies.
    pub fn drain(&mut self, id: u32, bytes: u64, k_drain: f64) {
        let was_active = self.nodes[id as usize].active;
        let mut node = self.nodes[id as usize].clone();
        node.drain(bytes, k_drain);
        if was_active && !node.active {
            self.set_active(id, false);
        }
        let slot = &mut self.nodes[id as usize];
        slot.drained_bytes = node.drained_bytes;
        slot.lifetime_fraction = node.lifetime_fraction;
    }
}

fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

/// Sensor readings. Values are keyed by (node, cycle) rather than drawn in
/// sequence, so two runs that emit different sets of reports still see the
/// same reading for the same report.
#[derive(Debug, Clone)]
pub struct ReadingSource {
    rng: StreamRng,
}

impl ReadingSource {
    pub fn new(streams: &SeedStreams) -> Self {
        ReadingSource {
            rng: streams.stream(TRAFFIC),
        }
    }

    pub fn reading(&mut self, node: &SensorNode, cycle: u64) -> f64 {
        self.rng.set_word_pos((node.id as u128) << 64 | (cycle as u128) << 2);
        let noise: f64 = self.rng.random_range(-5.0..5.0);
        round2(node.baseline_reading + noise)
    }
}

/// The synthetic reading record every sensor reports.
pub fn reading_document(node: &SensorNode, cycle: u64, value: f64) -> Value {
    json!({ "cycle": cycle, "sensor": node.id, "value": value })
}

/// Encodes a reading in the node's wire encoding.
pub fn encode_reading(node: &SensorNode, cycle: u64, value: f64) -> Vec<u8> {
    let doc = reading_document(node, cycle, value);
    match node.protocol.wire_encoding() {
        Encoding::Cbor => encode_cbor(&doc),
        Encoding::Json => serde_json::to_vec(&doc).expect("JSON values always serialize"),
    }
}

/// One envelope per active node whose report is due in `cycle`.
pub fn generate_traffic(fleet: &Fleet, cycle: u64, source: &mut ReadingSource) -> Vec<Envelope> {
    fleet
        .due(cycle)
        .map(|id| {
            let node = fleet.node(id);
            let value = source.reading(node, cycle);
            let payload = encode_reading(node, cycle, value);
            debug_assert!(payload.len() <= node.device_class.max_payload_bytes as usize);
            Envelope::new(node.id, node.protocol, payload, cycle)
        })
        .collect()
}
