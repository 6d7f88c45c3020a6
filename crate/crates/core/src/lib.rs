//! Over-The-Tangle (OTT) DID method.
//!
//! A DID of the form `did:ott:<index>` points at a 32-byte ledger index.
//! The index is derived from two ephemeral Ed25519 key pairs so that only
//! the holder of the seeds can later publish a revoke message that binds
//! back to the original create message.
//!
//! Layers, bottom up:
//!
//! - [`crypto`]: BLAKE2b-256 and pure Ed25519.
//! - [`index`]: seed to index/anchor derivation and the DID URI grammar.
//! - [`message`]: the bit-exact create/revoke wire format and its validators.
//! - [`ledger`]: append-only indexation store (in-memory simulator, HTTP client).
//! - [`method`]: Create / Resolve / Update / Revoke over any [`ledger::Ledger`].
//! - [`provider`]: named method tables fetched at run time.
//! - [`bench`]: latency-injected timing harness and empirical CDFs.

pub mod bench;
pub mod crypto;
pub mod index;
pub mod ledger;
pub mod message;
pub mod method;
pub mod provider;

pub use crypto::{Digest, Seed, Signature, SigningKeyPair};
pub use index::{Did, IndexMaterial};
pub use ledger::{Ledger, LedgerError, LedgerRecord, MemoryLedger};
pub use message::{MessageKind, OttMessage};
pub use method::{DidDocument, DidKeyRing, ResolutionResult, ResolutionStatus};
