//! Shared domain vocabulary: device classes, services, KPIs, QoS classes and
//! the scenario configuration.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::reward::RewardWeights;
use crate::error::ConfigError;
use crate::gateway::CostModel;

/// Constrained-device tier (Class 0 is the most constrained).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceTier {
    Class0,
    Class1,
    Class2,
}

impl DeviceTier {
    pub const ALL: [DeviceTier; 3] = [DeviceTier::Class0, DeviceTier::Class1, DeviceTier::Class2];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceClass {
    pub tier: DeviceTier,
    pub max_payload_bytes: u32,
    pub supports_server_stack: bool,
}

/// Per-tier payload limits. Must be strictly increasing with the tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadCaps {
    pub class0: u32,
    pub class1: u32,
    pub class2: u32,
}

impl Default for PayloadCaps {
    fn default() -> Self {
        PayloadCaps {
            class0: 64,
            class1: 256,
            class2: 1024,
        }
    }
}

impl PayloadCaps {
    pub fn device_class(&self, tier: DeviceTier) -> DeviceClass {
        let max_payload_bytes = match tier {
            DeviceTier::Class0 => self.class0,
            DeviceTier::Class1 => self.class1,
            DeviceTier::Class2 => self.class2,
        };
        DeviceClass {
            tier,
            max_payload_bytes,
            supports_server_stack: tier == DeviceTier::Class2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ServiceId {
    WindTurbine,
    SolarPanel,
    Transportation,
}

impl ServiceId {
    pub const ALL: [ServiceId; 3] = [
        ServiceId::WindTurbine,
        ServiceId::SolarPanel,
        ServiceId::Transportation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ServiceId::WindTurbine => "WindTurbine",
            ServiceId::SolarPanel => "SolarPanel",
            ServiceId::Transportation => "Transportation",
        }
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "CoAP")]
    Coap,
    #[serde(rename = "HTTP")]
    Http,
    #[serde(rename = "MQTT")]
    Mqtt,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Coap => "CoAP",
            Protocol::Http => "HTTP",
            Protocol::Mqtt => "MQTT",
        }
    }

    /// CoAP rides on UDP, MQTT and HTTP on TCP.
    pub fn transport(self) -> Transport {
        match self {
            Protocol::Coap => Transport::Udp,
            Protocol::Http | Protocol::Mqtt => Transport::Tcp,
        }
    }

    /// Wire encoding agents use for application payloads.
    pub fn wire_encoding(self) -> Encoding {
        match self {
            Protocol::Coap => Encoding::Cbor,
            Protocol::Http | Protocol::Mqtt => Encoding::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transport {
    #[serde(rename = "TCP")]
    Tcp,
    #[serde(rename = "UDP")]
    Udp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Encoding {
    #[serde(rename = "JSON")]
    Json,
    #[serde(rename = "CBOR")]
    Cbor,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Json => "JSON",
            Encoding::Cbor => "CBOR",
        }
    }
}

/// A smart-city service with its KPI bounds and application protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub id: ServiceId,
    pub max_delay_ms: f64,
    pub max_loss_rate: f64,
    pub protocol: Protocol,
}

impl ServiceSpec {
    /// KPI and protocol bindings of the smart-city scenario table.
    pub fn standard(id: ServiceId) -> ServiceSpec {
        let (max_delay_ms, max_loss_rate, protocol) = match id {
            ServiceId::WindTurbine => (300.0, 0.10, Protocol::Coap),
            ServiceId::SolarPanel => (300.0, 0.10, Protocol::Http),
            ServiceId::Transportation => (100.0, 0.05, Protocol::Mqtt),
        };
        ServiceSpec {
            id,
            max_delay_ms,
            max_loss_rate,
            protocol,
        }
    }

    pub fn meets(&self, delay_ms: f64, loss_rate: f64) -> bool {
        delay_ms <= self.max_delay_ms && loss_rate <= self.max_loss_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QosClassId {
    DelaySensitive,
    DelayTolerant,
}

impl QosClassId {
    pub const ALL: [QosClassId; 2] = [QosClassId::DelaySensitive, QosClassId::DelayTolerant];

    /// One-based class index `i` used by the density formula.
    pub fn index(self) -> u8 {
        match self {
            QosClassId::DelaySensitive => 1,
            QosClassId::DelayTolerant => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<QosClassId> {
        match i {
            1 => Some(QosClassId::DelaySensitive),
            2 => Some(QosClassId::DelayTolerant),
            _ => None,
        }
    }

    /// Zero-based slot for per-class arrays.
    pub fn slot(self) -> usize {
        self.index() as usize - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            QosClassId::DelaySensitive => "DelaySensitive",
            QosClassId::DelayTolerant => "DelayTolerant",
        }
    }
}

/// Parameters of one QoS class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosClassParams {
    pub reporting_interval_cycles: u32,
    pub service_capacity_per_cycle: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosClasses {
    pub delay_sensitive: QosClassParams,
    pub delay_tolerant: QosClassParams,
}

impl Default for QosClasses {
    fn default() -> Self {
        QosClasses {
            delay_sensitive: QosClassParams {
                reporting_interval_cycles: 1,
                service_capacity_per_cycle: 50,
            },
            delay_tolerant: QosClassParams {
                reporting_interval_cycles: 5,
                service_capacity_per_cycle: 10,
            },
        }
    }
}

/// A fully resolved QoS class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosClass {
    pub id: QosClassId,
    pub reporting_interval_ms: f64,
    pub reporting_interval_cycles: u32,
    pub service_capacity_per_cycle: u32,
}

/// Everything needed to reproduce one simulated smart-city network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub services: Vec<ServiceSpec>,
    pub num_sensors: u32,
    #[serde(default = "defaults::sim_cycles")]
    pub sim_cycles: u64,
    #[serde(default = "defaults::cycle_ms")]
    pub cycle_ms: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::churn_probability")]
    pub churn_probability: f64,
    /// Running datastore window `x`, in seconds.
    #[serde(default = "defaults::datastore_window_x")]
    pub datastore_window_x: u64,
    #[serde(default)]
    pub payload_caps: PayloadCaps,
    #[serde(default)]
    pub qos_classes: QosClasses,
    /// Lifetime fraction consumed per transmitted payload byte.
    #[serde(default = "defaults::k_drain")]
    pub k_drain: f64,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub reward: RewardWeights,
    /// Simulation cycles between two management decisions.
    #[serde(default = "defaults::decision_period_cycles")]
    pub decision_period_cycles: u32,
    /// Aggregation window used when smoothing reward traces.
    #[serde(default = "defaults::batch_size")]
    pub batch_size: u32,
}

pub mod defaults {
    pub const SIM_CYCLES: u64 = 12_000;
    pub const CYCLE_MS: f64 = 100.0;
    pub const CHURN_PROBABILITY: f64 = 0.01;
    pub const DATASTORE_WINDOW_X: u64 = 60;
    pub const K_DRAIN: f64 = 1.25e-6;
    pub const DECISION_PERIOD_CYCLES: u32 = 5;
    pub const BATCH_SIZE: u32 = 128;

    pub(crate) fn sim_cycles() -> u64 {
        SIM_CYCLES
    }
    pub(crate) fn cycle_ms() -> f64 {
        CYCLE_MS
    }
    pub(crate) fn churn_probability() -> f64 {
        CHURN_PROBABILITY
    }
    pub(crate) fn datastore_window_x() -> u64 {
        DATASTORE_WINDOW_X
    }
    pub(crate) fn k_drain() -> f64 {
        K_DRAIN
    }
    pub(crate) fn decision_period_cycles() -> u32 {
        DECISION_PERIOD_CYCLES
    }
    pub(crate) fn batch_size() -> u32 {
        BATCH_SIZE
    }
}

/// Builds a scenario from the standard service table.
///
/// One-service scenarios are accepted here so unit tests can exercise
/// degenerate networks; [`ScenarioConfig::validate_for_experiment`] rejects
/// them.
pub fn build_scenario(services: &[ServiceId], n: u32, seed: u64) -> Result<ScenarioConfig, ConfigError> {
    let config = ScenarioConfig {
        services: services.iter().copied().map(ServiceSpec::standard).collect(),
        num_sensors: n,
        sim_cycles: defaults::SIM_CYCLES,
        cycle_ms: defaults::CYCLE_MS,
        seed,
        churn_probability: defaults::CHURN_PROBABILITY,
        datastore_window_x: defaults::DATASTORE_WINDOW_X,
        payload_caps: PayloadCaps::default(),
        qos_classes: QosClasses::default(),
        k_drain: defaults::K_DRAIN,
        cost: CostModel::default(),
        reward: RewardWeights::default(),
        decision_period_cycles: defaults::DECISION_PERIOD_CYCLES,
        batch_size: defaults::BATCH_SIZE,
    };
    config.validate()?;
    Ok(config)
}

fn finite_nonneg(field: &'static str, v: f64, out: &mut Vec<ConfigError>) {
    if !(v.is_finite() && v >= 0.0) {
        out.push(ConfigError::OutOfRange {
            field,
            reason: format!("{v} must be finite and non-negative"),
        });
    }
}

fn unit_interval(field: &'static str, v: f64, out: &mut Vec<ConfigError>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(ConfigError::OutOfRange {
            field,
            reason: format!("{v} is outside [0, 1]"),
        });
    }
}

fn positive<T: PartialOrd + Default + fmt::Display>(field: &'static str, v: T, out: &mut Vec<ConfigError>) {
    if v.partial_cmp(&T::default()) != Some(core::cmp::Ordering::Greater) {
        out.push(ConfigError::OutOfRange {
            field,
            reason: format!("{v} must be positive"),
        });
    }
}

impl ScenarioConfig {
    /// Every invariant violation, in field order. Empty means valid.
    pub fn violations(&self) -> Vec<ConfigError> {
        self.violations_with_service_range(1, 3)
    }

    fn violations_with_service_range(&self, min: usize, max: usize) -> Vec<ConfigError> {
        let mut out = Vec::new();
        let got = self.services.len();
        if got < min || got > max {
            out.push(ConfigError::ServiceCount { min, max, got });
        }
        for (i, s) in self.services.iter().enumerate() {
            if self.services[..i].iter().any(|o| o.id == s.id) {
                out.push(ConfigError::DuplicateService(s.id));
            } else if self.services[..i].iter().any(|o| o.protocol == s.protocol) {
                out.push(ConfigError::DuplicateProtocol(s.protocol.name()));
            }
            if !(s.max_delay_ms.is_finite() && s.max_delay_ms > 0.0) {
                out.push(ConfigError::OutOfRange {
                    field: "services.max_delay_ms",
                    reason: format!("{} must be positive", s.max_delay_ms),
                });
            }
            unit_interval("services.max_loss_rate", s.max_loss_rate, &mut out);
        }
        if (self.num_sensors as usize) < got.max(1) {
            out.push(ConfigError::TooFewSensors {
                got: self.num_sensors,
                min: got.max(1) as u32,
            });
        }
        positive("sim_cycles", self.sim_cycles, &mut out);
        if !(self.cycle_ms.is_finite() && self.cycle_ms > 0.0) {
            out.push(ConfigError::OutOfRange {
                field: "cycle_ms",
                reason: format!("{} must be positive", self.cycle_ms),
            });
        }
        unit_interval("churn_probability", self.churn_probability, &mut out);
        positive("datastore_window_x", self.datastore_window_x, &mut out);
        let caps = self.payload_caps;
        if !(0 < caps.class0 && caps.class0 < caps.class1 && caps.class1 < caps.class2) {
            out.push(ConfigError::OutOfRange {
                field: "payload_caps",
                reason: String::from("caps must satisfy 0 < class0 < class1 < class2"),
            });
        }
        let q = self.qos_classes;
        positive(
            "qos_classes.delay_sensitive.reporting_interval_cycles",
            q.delay_sensitive.reporting_interval_cycles,
            &mut out,
        );
        positive(
            "qos_classes.delay_sensitive.service_capacity_per_cycle",
            q.delay_sensitive.service_capacity_per_cycle,
            &mut out,
        );
        positive(
            "qos_classes.delay_tolerant.service_capacity_per_cycle",
            q.delay_tolerant.service_capacity_per_cycle,
            &mut out,
        );
        if q.delay_sensitive.reporting_interval_cycles >= q.delay_tolerant.reporting_interval_cycles {
            out.push(ConfigError::OutOfRange {
                field: "qos_classes",
                reason: String::from("delay-sensitive interval must be shorter than delay-tolerant interval"),
            });
        }
        finite_nonneg("k_drain", self.k_drain, &mut out);
        finite_nonneg("cost.c_parse_json", self.cost.c_parse_json, &mut out);
        finite_nonneg("cost.c_parse_cbor", self.cost.c_parse_cbor, &mut out);
        finite_nonneg("cost.c_convert", self.cost.c_convert, &mut out);
        finite_nonneg("cost.c_query_base", self.cost.c_query_base, &mut out);
        finite_nonneg("reward.w_kpi", self.reward.w_kpi, &mut out);
        finite_nonneg("reward.w_energy", self.reward.w_energy, &mut out);
        positive("decision_period_cycles", self.decision_period_cycles, &mut out);
        positive("batch_size", self.batch_size, &mut out);
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Experiments compare 2- and 3-service networks only.
    pub fn experiment_violations(&self) -> Vec<ConfigError> {
        self.violations_with_service_range(2, 3)
    }

    pub fn validate_for_experiment(&self) -> Result<(), ConfigError> {
        match self.experiment_violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn service_ids(&self) -> Vec<ServiceId> {
        self.services.iter().map(|s| s.id).collect()
    }

    pub fn service(&self, id: ServiceId) -> Option<&ServiceSpec> {
        self.services.iter().find(|s| s.id == id)
    }

    pub fn qos_class(&self, id: QosClassId) -> QosClass {
        let p = match id {
            QosClassId::DelaySensitive => self.qos_classes.delay_sensitive,
            QosClassId::DelayTolerant => self.qos_classes.delay_tolerant,
        };
        QosClass {
            id,
            reporting_interval_ms: p.reporting_interval_cycles as f64 * self.cycle_ms,
            reporting_interval_cycles: p.reporting_interval_cycles,
            service_capacity_per_cycle: p.service_capacity_per_cycle,
        }
    }

    /// The QoS class a service's KPIs call for: a service whose delay bound
    /// fits inside one delay-sensitive reporting interval is delay-sensitive.
    pub fn required_class(&self, service: &ServiceSpec) -> QosClassId {
        if service.max_delay_ms <= self.qos_class(QosClassId::DelaySensitive).reporting_interval_ms {
            QosClassId::DelaySensitive
        } else {
            QosClassId::DelayTolerant
        }
    }

    /// Copy of this scenario with a different fleet size.
    pub fn with_sensors(&self, n: u32) -> ScenarioConfig {
        ScenarioConfig {
            num_sensors: n,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig { seed, ..self.clone() }
    }

    pub fn with_services(&self, services: &[ServiceId]) -> ScenarioConfig {
        ScenarioConfig {
            services: services.iter().copied().map(ServiceSpec::standard).collect(),
            ..self.clone()
        }
    }
}
