//! The IoT agent manager: a message handler that accepts JSON and CBOR
//! envelopes, a proxy that normalizes CBOR to canonical JSON, and the data
//! pool the management layer queries.
//!
//! Two gateways exist side by side. The cognitive one normalizes at ingest
//! and answers queries straight from JSON. The baseline keeps payloads in
//! their wire encoding and pays for format handling on every query.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codec::{canonical_json, decode_cbor};
use crate::error::{CodecError, IngestError};
use crate::model::{Encoding, Protocol, ScenarioConfig, ServiceId, Transport};

/// One application message as it arrives at the gateway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub source_id: u32,
    pub protocol: Protocol,
    pub transport: Transport,
    pub encoding: Encoding,
    pub payload: Vec<u8>,
    pub emitted_cycle: u64,
}

impl Envelope {
    /// Builds an envelope whose transport and encoding follow from the protocol.
    pub fn new(source_id: u32, protocol: Protocol, payload: Vec<u8>, emitted_cycle: u64) -> Self {
        Envelope {
            source_id,
            protocol,
            transport: protocol.transport(),
            encoding: protocol.wire_encoding(),
            payload,
            emitted_cycle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GatewayMode {
    #[serde(rename = "QCSM")]
    Qcsm,
    Baseline,
}

impl GatewayMode {
    pub fn name(self) -> &'static str {
        match self {
            GatewayMode::Qcsm => "QCSM",
            GatewayMode::Baseline => "Baseline",
        }
    }
}

/// Per-record and per-query processing costs, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub c_parse_json: f64,
    pub c_parse_cbor: f64,
    pub c_convert: f64,
    pub c_query_base: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            c_parse_json: 0.010,
            c_parse_cbor: 0.008,
            c_convert: 0.015,
            c_query_base: 1.0,
        }
    }
}

impl CostModel {
    /// Cost of accepting one envelope. Only the cognitive gateway converts
    /// CBOR at this point.
    pub fn ingest_cost(&self, mode: GatewayMode, encoding: Encoding) -> f64 {
        match (mode, encoding) {
            (_, Encoding::Json) => self.c_parse_json,
            (GatewayMode::Qcsm, Encoding::Cbor) => self.c_parse_cbor + self.c_convert,
            (GatewayMode::Baseline, Encoding::Cbor) => self.c_parse_cbor,
        }
    }

    /// Cost of reading one matched record back as JSON.
    pub fn read_cost(&self, mode: GatewayMode, original: Encoding) -> f64 {
        match (mode, original) {
            (GatewayMode::Qcsm, _) | (GatewayMode::Baseline, Encoding::Json) => self.c_parse_json,
            (GatewayMode::Baseline, Encoding::Cbor) => self.c_parse_cbor + self.c_convert,
        }
    }

    /// Response time of a query that matched `records`.
    ///
    /// The cognitive gateway answers from one homogeneous JSON pool, so it
    /// pays the fixed query overhead once. The baseline has no common format
    /// and runs one sub-query per distinct origin protocol among the matches.
    pub fn query_cost<'a>(&self, mode: GatewayMode, records: impl IntoIterator<Item = &'a DataPoolRecord>) -> f64 {
        let mut protocols = BTreeSet::new();
        let mut per_record = 0.0;
        for r in records {
            protocols.insert(r.protocol);
            per_record += self.read_cost(mode, r.original_encoding);
        }
        let sub_queries = match mode {
            GatewayMode::Qcsm => 1,
            GatewayMode::Baseline => protocols.len().max(1),
        };
        self.c_query_base * sub_queries as f64 + per_record
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoredPayload {
    /// Canonical JSON text.
    Normalized(String),
    /// Payload bytes exactly as received.
    Verbatim(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPoolRecord {
    pub source_id: u32,
    pub service: ServiceId,
    pub protocol: Protocol,
    pub stored: StoredPayload,
    pub original_encoding: Encoding,
    pub ingested_cycle: u64,
}

impl DataPoolRecord {
    /// The record's payload as a JSON value, converting stored CBOR if needed.
    pub fn document(&self) -> Result<Value, CodecError> {
        match &self.stored {
            StoredPayload::Normalized(text) => parse_json(text.as_bytes()),
            StoredPayload::Verbatim(bytes) => match self.original_encoding {
                Encoding::Cbor => decode_cbor(bytes),
                Encoding::Json => parse_json(bytes),
            },
        }
    }

    /// The record as one line of the pool dump.
    pub fn to_dump_json(&self) -> Result<Value, CodecError> {
        Ok(json!({
            "source_id": self.source_id,
            "service": self.service,
            "protocol": self.protocol,
            "original_encoding": self.original_encoding,
            "ingested_cycle": self.ingested_cycle,
            "document": self.document()?,
        }))
    }
}

fn parse_json(bytes: &[u8]) -> Result<Value, CodecError> {
    serde_json::from_slice(bytes).map_err(|e| CodecError::Json(alloc::format!("{e}")))
}

/// Turns one envelope into a pool record and reports its ingest cost.
pub fn handle_message(
    envelope: &Envelope,
    service: ServiceId,
    mode: GatewayMode,
    cost: &CostModel,
    cycle: u64,
) -> Result<(DataPoolRecord, f64), IngestError> {
    let stored = match (mode, envelope.encoding) {
        (GatewayMode::Qcsm, Encoding::Cbor) => {
            StoredPayload::Normalized(canonical_json(&decode_cbor(&envelope.payload)?))
        }
        (GatewayMode::Qcsm, Encoding::Json) => {
            StoredPayload::Normalized(canonical_json(&parse_json(&envelope.payload)?))
        }
        (GatewayMode::Baseline, Encoding::Cbor) => {
            decode_cbor(&envelope.payload)?;
            StoredPayload::Verbatim(envelope.payload.clone())
        }
        (GatewayMode::Baseline, Encoding::Json) => {
            parse_json(&envelope.payload)?;
            StoredPayload::Verbatim(envelope.payload.clone())
        }
    };
    let record = DataPoolRecord {
        source_id: envelope.source_id,
        service,
        protocol: envelope.protocol,
        stored,
        original_encoding: envelope.encoding,
        ingested_cycle: cycle,
    };
    Ok((record, cost.ingest_cost(mode, envelope.encoding)))
}

/// Append-only record log ordered by ingest cycle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataPool {
    records: Vec<DataPoolRecord>,
}

impl DataPool {
    pub fn new() -> Self {
        DataPool::default()
    }

    pub fn append(&mut self, record: DataPoolRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.ingested_cycle <= record.ingested_cycle));
        self.records.push(record);
    }

    pub fn records(&self) -> &[DataPoolRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records ingested within `window` for `selector` (`None` = every service).
    pub fn select(&self, selector: Option<ServiceId>, window: Range<u64>) -> impl Iterator<Item = &DataPoolRecord> {
        let lo = self.records.partition_point(|r| r.ingested_cycle < window.start);
        let hi = self.records.partition_point(|r| r.ingested_cycle < window.end);
        self.records[lo..hi.max(lo)]
            .iter()
            .filter(move |r| selector.is_none_or(|s| r.service == s))
    }

    /// Discards every record ingested before `cycle`.
    pub fn compact_before(&mut self, cycle: u64) {
        let cut = self.records.partition_point(|r| r.ingested_cycle < cycle);
        self.records.drain(..cut);
    }

    /// Newline-delimited canonical JSON, one record per line.
    pub fn dump_ndjson(&self) -> Result<String, CodecError> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&canonical_json(&r.to_dump_json()?));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub documents: Vec<Value>,
    pub response_time_ms: f64,
}

/// Answers a management query from the pool, returning JSON in both modes.
pub fn query(
    pool: &DataPool,
    selector: Option<ServiceId>,
    window: Range<u64>,
    mode: GatewayMode,
    cost: &CostModel,
) -> Result<QueryResult, CodecError> {
    let matched: Vec<&DataPoolRecord> = pool.select(selector, window).collect();
    let documents = matched.iter().map(|r| r.document()).collect::<Result<Vec<_>, _>>()?;
    Ok(QueryResult {
        documents,
        response_time_ms: cost.query_cost(mode, matched.iter().copied()),
    })
}

/// A gateway instance: routing table, data pool and running counters.
#[derive(Debug, Clone)]
pub struct Gateway {
    mode: GatewayMode,
    cost: CostModel,
    routes: Vec<(Protocol, ServiceId)>,
    pool: DataPool,
    rejected: u64,
    ingest_ms: f64,
}

impl Gateway {
    pub fn new(config: &ScenarioConfig, mode: GatewayMode) -> Self {
        Gateway {
            mode,
            cost: config.cost,
            routes: config.services.iter().map(|s| (s.protocol, s.id)).collect(),
            pool: DataPool::new(),
            rejected: 0,
            ingest_ms: 0.0,
        }
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn pool(&self) -> &DataPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut DataPool {
        &mut self.pool
    }

    /// Envelopes dropped because they failed to decode or route.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Total ingest processing time charged so far.
    pub fn ingest_time_ms(&self) -> f64 {
        self.ingest_ms
    }

    /// Ingests one envelope. Failures are counted and the envelope dropped.
    pub fn ingest(&mut self, envelope: &Envelope, cycle: u64) -> Result<(), IngestError> {
        let result = self
            .routes
            .iter()
            .find(|(p, _)| *p == envelope.protocol)
            .ok_or(IngestError::UnroutedProtocol(envelope.protocol.name()))
            .and_then(|&(_, service)| handle_message(envelope, service, self.mode, &self.cost, cycle));
        match result {
            Ok((record, cost)) => {
                self.pool.append(record);
                self.ingest_ms += cost;
                Ok(())
            }
            Err(e) => {
                self.rejected += 1;
                Err(e)
            }
        }
    }

    pub fn query(&self, selector: Option<ServiceId>, window: Range<u64>) -> Result<QueryResult, CodecError> {
        query(&self.pool, selector, window, self.mode, &self.cost)
    }
}
