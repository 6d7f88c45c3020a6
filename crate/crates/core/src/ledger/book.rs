use std::collections::HashMap;

use thiserror::Error;

use super::{message_id, LedgerRecord, MessageId};
use crate::crypto::Digest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("expected sequence {expected}, got {actual}")]
    OutOfOrder { expected: u64, actual: u64 },
    #[error("message id does not match record contents at sequence {0}")]
    IdMismatch(u64),
}

/// In-memory index of ledger records with sequence assignment.
///
/// Shared by the simulator and the gateway so both assign sequences and
/// message ids the same way.
#[derive(Debug, Default, Clone)]
pub struct RecordBook {
    records: Vec<LedgerRecord>,
    by_index: HashMap<Digest, Vec<usize>>,
    by_id: HashMap<MessageId, usize>,
}

impl RecordBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_sequence(&self) -> u64 {
        self.records.len() as u64
    }

    /// Builds the record that `insert` would accept next.
    pub fn prepare(&self, index: Digest, payload: Vec<u8>, attached_at: u64) -> LedgerRecord {
        let sequence = self.next_sequence();
        LedgerRecord {
            message_id: message_id(&index, &payload, sequence),
            index,
            payload,
            attached_at,
            sequence,
        }
    }

    pub fn insert(&mut self, record: LedgerRecord) -> Result<(), BookError> {
        let expected = self.next_sequence();
        if record.sequence != expected {
            return Err(BookError::OutOfOrder {
                expected,
                actual: record.sequence,
            });
        }
        if record.message_id != message_id(&record.index, &record.payload, record.sequence) {
            return Err(BookError::IdMismatch(record.sequence));
        }
        let slot = self.records.len();
        self.by_index.entry(record.index).or_default().push(slot);
        self.by_id.insert(record.message_id, slot);
        self.records.push(record);
        Ok(())
    }

    pub fn fetch(&self, index: &Digest) -> Vec<LedgerRecord> {
        self.by_index
            .get(index)
            .map(|slots| slots.iter().map(|&i| self.records[i].clone()).collect())
            .unwrap_or_default()
    }

    pub fn message_ids(&self, index: &Digest) -> Vec<MessageId> {
        self.by_index
            .get(index)
            .map(|slots| slots.iter().map(|&i| self.records[i].message_id).collect())
            .unwrap_or_default()
    }

    pub fn get(&self, id: &MessageId) -> Option<&LedgerRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }
}
