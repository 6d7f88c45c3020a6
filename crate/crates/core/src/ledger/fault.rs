use parking_lot::Mutex;

use super::{Ledger, LedgerError, LedgerRecord, MessageId};
use crate::crypto::Digest;

/// Wraps a ledger and starts failing attaches after a budget runs out.
///
/// Used to exercise partial failures such as an update whose revoke
/// landed but whose create did not.
#[derive(Debug)]
pub struct FaultInjector<L> {
    inner: L,
    attach_budget: Mutex<Option<u64>>,
    fail_fetches: Mutex<bool>,
}

impl<L: Ledger> FaultInjector<L> {
    pub fn new(inner: L) -> Self {
        Self {
            inner,
            attach_budget: Mutex::new(None),
            fail_fetches: Mutex::new(false),
        }
    }

    /// Allow `n` more attaches, then fail every attach with `Unavailable`.
    pub fn fail_attaches_after(&self, n: u64) {
        *self.attach_budget.lock() = Some(n);
    }

    pub fn fail_fetches(&self, fail: bool) {
        *self.fail_fetches.lock() = fail;
    }

    pub fn heal(&self) {
        *self.attach_budget.lock() = None;
        *self.fail_fetches.lock() = false;
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }
}

impl<L: Ledger> Ledger for FaultInjector<L> {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        {
            let mut budget = self.attach_budget.lock();
            match budget.as_mut() {
                Some(0) => return Err(LedgerError::Unavailable("injected attach fault".into())),
                Some(n) => *n -= 1,
                None => {}
            }
        }
        self.inner.attach(index, payload)
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        if *self.fail_fetches.lock() {
            return Err(LedgerError::Unavailable("injected fetch fault".into()));
        }
        self.inner.fetch_by_index(index)
    }
}
