//! Append-only indexation store.
//!
//! The ledger stores arbitrary bytes under arbitrary 32-byte indexes and
//! never interprets them. Records under one index come back in the order
//! the ledger accepted them (its arrival sequence).

mod book;
mod fault;
mod http;
mod latency;
mod memory;
pub mod wire;

use std::sync::Arc;

use thiserror::Error;

use crate::crypto::{self, Digest};

pub use book::{BookError, RecordBook};
pub use fault::FaultInjector;
pub use http::{HttpLedger, HttpLedgerConfig, DEFAULT_NODE_URL};
pub use latency::{Delay, LatencyProfile, LatencySampler};
pub use memory::MemoryLedger;

/// Simulator cap on a single payload.
pub const MAX_PAYLOAD: usize = 32 * 1024;

pub type MessageId = Digest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("payload of {size} bytes exceeds the {max}-byte limit")]
    PayloadTooLarge { size: usize, max: usize },
    #[error("payload is empty")]
    EmptyPayload,
    #[error("ledger unavailable: {0}")]
    Unavailable(String),
    #[error("request rejected by the ledger: {0}")]
    Rejected(String),
    #[error("unexpected ledger response: {0}")]
    Protocol(String),
    #[error("invalid latency profile: {0}")]
    InvalidProfile(String),
}

/// One attached message as the ledger stores it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerRecord {
    pub message_id: MessageId,
    pub index: Digest,
    pub payload: Vec<u8>,
    /// UTC milliseconds since the Unix epoch, assigned by the ledger.
    pub attached_at: u64,
    pub sequence: u64,
}

/// `H(index || payload || be64(sequence))`
pub fn message_id(index: &Digest, payload: &[u8], sequence: u64) -> MessageId {
    crypto::hash_concat(&[index.as_bytes(), payload, &sequence.to_be_bytes()])
}

pub(crate) fn check_payload(payload: &[u8], max: usize) -> Result<(), LedgerError> {
    if payload.is_empty() {
        return Err(LedgerError::EmptyPayload);
    }
    if payload.len() > max {
        return Err(LedgerError::PayloadTooLarge {
            size: payload.len(),
            max,
        });
    }
    Ok(())
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// The two indexation primitives every ledger backend provides.
///
/// Implementations are safe for concurrent use. Once `attach` returns,
/// every later `fetch_by_index` on the same ledger includes the record.
pub trait Ledger: Send + Sync {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError>;

    /// All records under `index`, ascending by sequence.
    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError>;
}

impl<L: Ledger + ?Sized> Ledger for &L {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        (**self).attach(index, payload)
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        (**self).fetch_by_index(index)
    }
}

impl<L: Ledger + ?Sized> Ledger for Arc<L> {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        (**self).attach(index, payload)
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        (**self).fetch_by_index(index)
    }
}

impl<L: Ledger + ?Sized> Ledger for Box<L> {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        (**self).attach(index, payload)
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        (**self).fetch_by_index(index)
    }
}
