use alloc::string::String;

use thiserror::Error;

use crate::model::{QosClassId, ServiceId};

/// A scenario configuration that violates one of its invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("services: {0:?} listed more than once")]
    DuplicateService(ServiceId),
    #[error("services: protocol {0} used by more than one service")]
    DuplicateProtocol(&'static str),
    #[error("services: expected between {min} and {max} services, got {got}")]
    ServiceCount { min: usize, max: usize, got: usize },
    #[error("num_sensors: {got} is below the minimum of {min} (one master per service)")]
    TooFewSensors { got: u32, min: u32 },
    #[error("{field}: {reason}")]
    OutOfRange { field: &'static str, reason: String },
}

/// Failure while decoding a CBOR item.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed CBOR at offset {offset}: {reason}")]
    Decode { offset: usize, reason: &'static str },
    #[error("CBOR item at offset {offset} has no JSON representation: {item}")]
    UnsupportedItem { offset: usize, item: &'static str },
    #[error("invalid JSON payload: {0}")]
    Json(String),
}

/// A caller broke a documented precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("contract violation: {0}")]
pub struct ContractViolation(pub &'static str);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("density of {0:?} is undefined: no device is waiting in its queue")]
    DensityUndefined(QosClassId),
    #[error("candidate datastore is empty: run training first")]
    NotTrained,
    #[error(transparent)]
    Contract(#[from] ContractViolation),
}

/// Why the gateway dropped an envelope.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("no service is bound to protocol {0}")]
    UnroutedProtocol(&'static str),
}
