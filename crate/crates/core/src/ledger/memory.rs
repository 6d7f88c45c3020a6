use std::thread;

use parking_lot::{Mutex, RwLock};

use super::{
    check_payload, now_ms, LatencyProfile, LatencySampler, Ledger, LedgerError, LedgerRecord,
    MessageId, RecordBook, MAX_PAYLOAD,
};
use crate::crypto::Digest;

/// Process-lifetime simulated Tangle with latency injection.
#[derive(Debug)]
pub struct MemoryLedger {
    book: RwLock<RecordBook>,
    // serializes sequence assignment; readers only take `book`
    writer: Mutex<()>,
    latency: RwLock<LatencySampler>,
    max_payload: usize,
}

impl Default for MemoryLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl MemoryLedger {
    pub fn new() -> Self {
        Self {
            book: RwLock::new(RecordBook::new()),
            writer: Mutex::new(()),
            latency: RwLock::new(LatencySampler::none()),
            max_payload: MAX_PAYLOAD,
        }
    }

    pub fn with_latency(profile: LatencyProfile, seed: Option<u64>) -> Result<Self, LedgerError> {
        let ledger = Self::new();
        ledger.configure_latency(profile, seed)?;
        Ok(ledger)
    }

    /// Replaces the latency profile for all subsequent calls.
    pub fn configure_latency(
        &self,
        profile: LatencyProfile,
        seed: Option<u64>,
    ) -> Result<(), LedgerError> {
        *self.latency.write() = LatencySampler::new(profile, seed)?;
        Ok(())
    }

    pub fn latency_profile(&self) -> LatencyProfile {
        *self.latency.read().profile()
    }

    pub fn len(&self) -> usize {
        self.book.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every record in arrival order.
    pub fn records(&self) -> Vec<LedgerRecord> {
        self.book.read().records().to_vec()
    }

    pub fn get(&self, id: &MessageId) -> Option<LedgerRecord> {
        self.book.read().get(id).cloned()
    }
}

impl Ledger for MemoryLedger {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        check_payload(payload, self.max_payload)?;
        let delay = self.latency.read().attach_delay();
        if !delay.is_zero() {
            thread::sleep(delay);
        }
        let _writer = self.writer.lock();
        let record = self.book.read().prepare(*index, payload.to_vec(), now_ms());
        let id = record.message_id;
        self.book
            .write()
            .insert(record)
            .expect("sequence assigned under the writer lock");
        Ok(id)
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        let delay = self.latency.read().fetch_delay();
        if !delay.is_zero() {
            thread::sleep(delay);
        }
        Ok(self.book.read().fetch(index))
    }
}
