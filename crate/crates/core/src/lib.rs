//! Core of a Q-learning based cognitive service manager for heterogeneous
//! IoT sensor fleets.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the pure parts of the
//! system:
//!
//! * [`model`]: device classes, smart-city services, QoS classes and the
//!   scenario configuration every other module consumes.
//! * [`fleet`]: battery-powered constrained sensors, churn, per-class queues
//!   and synthetic traffic generation.
//! * [`codec`] and [`gateway`]: the agent manager that ingests JSON/CBOR
//!   envelopes, normalizes them to canonical JSON and answers queries under
//!   an explicit response-time cost model.
//! * [`engine`]: QoS class density, the assignment MDP, the Bellman update,
//!   epsilon-greedy selection and the training loop that fills the candidate
//!   datastore.
//! * [`sim`]: the cycle-level network simulation that ties fleet, gateway and
//!   datastores together.
//!
//! File formats, statistics, the experiment harness and the CLI live in the
//! `qcsm` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod codec;
pub mod engine;
pub mod error;
pub mod fleet;
pub mod gateway;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{CodecError, ConfigError, ContractViolation, EngineError, IngestError};
pub use model::{
    build_scenario, DeviceClass, DeviceTier, Encoding, Protocol, QosClass, QosClassId,
    ScenarioConfig, ServiceId, ServiceSpec, Transport,
};
