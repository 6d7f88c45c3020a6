//! The four DID method operations over any [`Ledger`].
//!
//! Resolution rules, applied to the records under a DID's index in
//! ledger order:
//!
//! | records                                           | status     |
//! |---------------------------------------------------|------------|
//! | none, or none decode as OTT messages              | `NotFound` |
//! | OTT messages, but no create passes validation     | `Invalid`  |
//! | a governing create and a revoke bound to it       | `Revoked`  |
//! | a governing create whose document does not parse  | `Invalid`  |
//! | a governing create with a well-formed document    | `Valid`    |
//!
//! The governing create is the first create that validates against the
//! index. The first revoke that validates against the governing create
//! revokes the DID for good. Callers must not drive two concurrent
//! revoke/update calls with the same [`DidKeyRing`].

mod document;
mod keyring;

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::crypto::Seed;
use crate::index::{Did, IndexMaterial};
use crate::ledger::{Ledger, LedgerError, LedgerRecord, MessageId};
use crate::message::{self, MessageError, MessageKind, OttMessage};

pub use document::{
    format_created, parse_document, serialize_document, AuthKey, AuthenticationMethod, DidDocument,
    ParseError, DEFAULT_KEY_TYPE, DID_CONTEXT, KEY_FRAGMENT, KNOWN_KEY_TYPES,
};
pub use keyring::{DidKeyRing, KeyringError};

#[derive(Debug, Error)]
pub enum MethodError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("serialized document is {0} bytes, over the 31600-byte limit")]
    DocumentTooLarge(usize),
    #[error("authentication key is empty")]
    EmptyAuthKey,
    #[error("unsupported verification method type `{0}`")]
    UnsupportedKeyType(String),
    #[error("{0} is already revoked")]
    AlreadyRevoked(Did),
    #[error("{revoked} was revoked but its replacement was not created: {source}")]
    PartialUpdate {
        revoked: Did,
        #[source]
        source: Box<MethodError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ResolutionStatus {
    Valid,
    Revoked,
    NotFound,
    Invalid,
}

/// Which records decided a resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    pub create_record: Option<MessageId>,
    pub revoke_record: Option<MessageId>,
    pub messages_scanned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionResult {
    pub status: ResolutionStatus,
    /// Present only when `status` is `Valid`.
    pub document: Option<DidDocument>,
    pub evidence: Evidence,
}

impl ResolutionResult {
    fn without_document(status: ResolutionStatus, evidence: Evidence) -> Self {
        Self {
            status,
            document: None,
            evidence,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ResolutionStatus::Valid
    }

    /// `{"status": ..., "document": {...}}`, with `{}` for an absent document.
    pub fn to_json(&self) -> serde_json::Value {
        let document = self
            .document
            .as_ref()
            .map(|d| serde_json::to_value(d).expect("document serializes"))
            .unwrap_or_else(|| serde_json::json!({}));
        serde_json::json!({ "status": self.status, "document": document })
    }
}

fn check_auth_key(key: &AuthKey) -> Result<(), MethodError> {
    if key.der().is_empty() {
        return Err(MethodError::EmptyAuthKey);
    }
    if !KNOWN_KEY_TYPES.contains(&key.key_type()) {
        return Err(MethodError::UnsupportedKeyType(key.key_type().to_owned()));
    }
    Ok(())
}

/// Creates a DID from fresh OS-random seeds. The returned keyring is the
/// only way to revoke the DID later.
pub fn create<L: Ledger + ?Sized>(
    auth_key: &AuthKey,
    ledger: &L,
) -> Result<DidKeyRing, MethodError> {
    create_with(Seed::random(), Seed::random(), Utc::now(), auth_key, ledger)
}

/// [`create`] with caller-provided seeds and document timestamp.
pub fn create_with<L: Ledger + ?Sized>(
    seed1: Seed,
    seed2: Seed,
    created: DateTime<Utc>,
    auth_key: &AuthKey,
    ledger: &L,
) -> Result<DidKeyRing, MethodError> {
    check_auth_key(auth_key)?;
    let material = IndexMaterial::derive(seed1, seed2);
    let did = material.did();
    let document = serialize_document(&DidDocument::new(&did, created, auth_key));
    let payload = message::encode_create(&document, &material).map_err(|e| match e {
        MessageError::DataTooLarge(n) => MethodError::DocumentTooLarge(n),
        other => unreachable!("serialized documents are never empty: {other}"),
    })?;
    ledger.attach(material.index(), &payload)?;
    Ok(DidKeyRing::new(material, auth_key.clone()))
}

pub fn resolve<L: Ledger + ?Sized>(did: &Did, ledger: &L) -> Result<ResolutionResult, LedgerError> {
    let records = ledger.fetch_by_index(did.index())?;
    Ok(resolve_records(did, &records))
}

/// Resolution as a pure function of the records stored under the index.
pub fn resolve_records(did: &Did, records: &[LedgerRecord]) -> ResolutionResult {
    let index = did.index();
    let mut evidence = Evidence {
        messages_scanned: records.len(),
        ..Evidence::default()
    };
    let decoded: Vec<(&LedgerRecord, OttMessage)> = records
        .iter()
        .filter_map(|r| message::decode_message(&r.payload).ok().map(|m| (r, m)))
        .collect();
    if decoded.is_empty() {
        return ResolutionResult::without_document(ResolutionStatus::NotFound, evidence);
    }

    let Some((create_record, create)) = decoded
        .iter()
        .find(|(_, m)| m.kind() == MessageKind::Create && message::validate_create(m, index))
    else {
        return ResolutionResult::without_document(ResolutionStatus::Invalid, evidence);
    };
    evidence.create_record = Some(create_record.message_id);
    let anchor = create.anchor().expect("create messages carry an anchor");

    if let Some((revoke_record, _)) = decoded.iter().find(|(_, m)| {
        m.kind() == MessageKind::Revoke
            && message::validate_revoke(m, create.public_key(), anchor, index)
    }) {
        evidence.revoke_record = Some(revoke_record.message_id);
        return ResolutionResult::without_document(ResolutionStatus::Revoked, evidence);
    }

    match parse_document(create.data()) {
        Ok(doc) if doc.id == did.uri() => ResolutionResult {
            status: ResolutionStatus::Valid,
            document: Some(doc),
            evidence,
        },
        _ => ResolutionResult::without_document(ResolutionStatus::Invalid, evidence),
    }
}

/// Attaches a revoke message for the keyring's DID. The ledger accepts
/// duplicates; the first valid revoke is the one that counts.
pub fn revoke<L: Ledger + ?Sized>(
    keyring: &DidKeyRing,
    ledger: &L,
) -> Result<MessageId, MethodError> {
    let material = keyring.material();
    Ok(ledger.attach(material.index(), &message::encode_revoke(material))?)
}

/// [`revoke`], failing with `AlreadyRevoked` if a resolve shows the DID is
/// already revoked. Best effort: another writer can still race in.
pub fn revoke_checked<L: Ledger + ?Sized>(
    keyring: &DidKeyRing,
    ledger: &L,
) -> Result<MessageId, MethodError> {
    if resolve(keyring.did(), ledger)?.status == ResolutionStatus::Revoked {
        return Err(MethodError::AlreadyRevoked(*keyring.did()));
    }
    revoke(keyring, ledger)
}

/// Revokes the current DID, then creates a new one from fresh seeds.
pub fn update<L: Ledger + ?Sized>(
    keyring: &DidKeyRing,
    auth_key: &AuthKey,
    ledger: &L,
) -> Result<DidKeyRing, MethodError> {
    update_with(
        keyring,
        Seed::random(),
        Seed::random(),
        Utc::now(),
        auth_key,
        ledger,
    )
}

pub fn update_with<L: Ledger + ?Sized>(
    keyring: &DidKeyRing,
    seed1: Seed,
    seed2: Seed,
    created: DateTime<Utc>,
    auth_key: &AuthKey,
    ledger: &L,
) -> Result<DidKeyRing, MethodError> {
    check_auth_key(auth_key)?;
    revoke(keyring, ledger)?;
    create_with(seed1, seed2, created, auth_key, ledger).map_err(|e| MethodError::PartialUpdate {
        revoked: *keyring.did(),
        source: Box::new(e),
    })
}
