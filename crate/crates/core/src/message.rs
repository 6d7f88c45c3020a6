//! OTT create and revoke ledger messages.
//!
//! Wire layout (all integers big-endian):
//!
//! ```text
//! create: tag1[32] tag2[32] len[2] data[len] pk2[32] anchor[32] sig[64]   194 + len bytes
//! revoke: tag1[32] tag2[32] 0x0001 0x00        pk1[32]            sig[64]   163 bytes
//! ```
//!
//! The signature covers every byte before it. Create messages are signed
//! with sk2, revoke messages with sk1, so each verifies against the public
//! key it carries.

use std::sync::OnceLock;

use thiserror::Error;

use crate::crypto::{self, Digest, PublicKey, Signature, PUBLIC_KEY_LEN, SIGNATURE_LEN};
use crate::index::{self, IndexMaterial};

pub const TAG_LEN: usize = 32;
pub const LENGTH_FIELD_LEN: usize = 2;
pub const ANCHOR_LEN: usize = 32;
/// Largest Data field a create message may carry.
pub const MAX_DATA_LEN: usize = 31_600;
/// Everything except Data and Anchor.
pub const FIXED_OVERHEAD: usize = TAG_LEN * 2 + LENGTH_FIELD_LEN + PUBLIC_KEY_LEN + SIGNATURE_LEN;
pub const CREATE_OVERHEAD: usize = FIXED_OVERHEAD + ANCHOR_LEN;
pub const REVOKE_LEN: usize = FIXED_OVERHEAD + 1;
pub const MAX_CREATE_LEN: usize = CREATE_OVERHEAD + MAX_DATA_LEN;

const TAG1_LABEL: &[u8] = b"OTT-MESSAGE-TAG-1";
const TAG2_LABEL: &[u8] = b"OTT-MESSAGE-TAG-2";
const DATA_OFFSET: usize = TAG_LEN * 2 + LENGTH_FIELD_LEN;

/// BLAKE2b-256("OTT-MESSAGE-TAG-1")
pub fn tag1() -> &'static [u8; TAG_LEN] {
    static TAG: OnceLock<[u8; TAG_LEN]> = OnceLock::new();
    TAG.get_or_init(|| *crypto::hash(TAG1_LABEL).as_bytes())
}

/// BLAKE2b-256("OTT-MESSAGE-TAG-2")
pub fn tag2() -> &'static [u8; TAG_LEN] {
    static TAG: OnceLock<[u8; TAG_LEN]> = OnceLock::new();
    TAG.get_or_init(|| *crypto::hash(TAG2_LABEL).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("document of {0} bytes exceeds the {MAX_DATA_LEN}-byte data field")]
    DataTooLarge(usize),
    #[error("document is empty")]
    EmptyDocument,
    #[error("not an OTT message: {0}")]
    NotOttMessage(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Create,
    Revoke,
}

/// A structurally decoded message. Decoding checks layout only; use
/// [`validate_create`] / [`validate_revoke`] for signatures and bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OttMessage {
    kind: MessageKind,
    data: Vec<u8>,
    public_key: PublicKey,
    anchor: Option<Digest>,
    signature: Signature,
    /// The signed prefix of the original payload.
    signed: Vec<u8>,
}

impl OttMessage {
    pub fn kind(&self) -> MessageKind {
        self.kind
    }

    pub fn tag1(&self) -> &[u8; TAG_LEN] {
        tag1()
    }

    pub fn tag2(&self) -> &[u8; TAG_LEN] {
        tag2()
    }

    pub fn data_length(&self) -> u16 {
        self.data.len() as u16
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// pk2 for create messages, pk1 for revoke messages.
    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    /// Present only on create messages.
    pub fn anchor(&self) -> Option<&Digest> {
        self.anchor.as_ref()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// The bytes covered by the signature.
    pub fn signed_bytes(&self) -> &[u8] {
        &self.signed
    }

    pub fn encoded_len(&self) -> usize {
        self.signed.len() + SIGNATURE_LEN
    }

    /// Re-serializes the message; equal to the decoded payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.signed.clone();
        out.extend_from_slice(self.signature.as_bytes());
        out
    }
}

fn header(data_len: usize, capacity: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(capacity);
    out.extend_from_slice(tag1());
    out.extend_from_slice(tag2());
    out.extend_from_slice(&(data_len as u16).to_be_bytes());
    out
}

pub fn encode_create(document: &[u8], material: &IndexMaterial) -> Result<Vec<u8>, MessageError> {
    if document.is_empty() {
        return Err(MessageError::EmptyDocument);
    }
    if document.len() > MAX_DATA_LEN {
        return Err(MessageError::DataTooLarge(document.len()));
    }
    let mut out = header(document.len(), CREATE_OVERHEAD + document.len());
    out.extend_from_slice(document);
    out.extend_from_slice(material.creation_key().public());
    out.extend_from_slice(material.anchor().as_bytes());
    let sig = crypto::sign(material.creation_key().secret(), &out);
    out.extend_from_slice(sig.as_bytes());
    Ok(out)
}

pub fn encode_revoke(material: &IndexMaterial) -> Vec<u8> {
    let mut out = header(1, REVOKE_LEN);
    out.push(0x00);
    out.extend_from_slice(material.revocation_key().public());
    let sig = crypto::sign(material.revocation_key().secret(), &out);
    out.extend_from_slice(sig.as_bytes());
    out
}

fn take<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N]
        .try_into()
        .expect("bounds checked by caller")
}

pub fn decode_message(payload: &[u8]) -> Result<OttMessage, MessageError> {
    use MessageError::NotOttMessage;

    if payload.len() < FIXED_OVERHEAD {
        return Err(NotOttMessage("payload shorter than the fixed fields"));
    }
    if payload[..TAG_LEN] != tag1()[..] || payload[TAG_LEN..2 * TAG_LEN] != tag2()[..] {
        return Err(NotOttMessage("tag mismatch"));
    }
    let data_len = u16::from_be_bytes(take(payload, 2 * TAG_LEN)) as usize;
    let extra = payload
        .len()
        .checked_sub(FIXED_OVERHEAD + data_len)
        .ok_or(NotOttMessage("payload shorter than its data length"))?;

    let kind = match extra {
        ANCHOR_LEN => MessageKind::Create,
        0 => MessageKind::Revoke,
        _ => return Err(NotOttMessage("length inconsistent with both layouts")),
    };
    let data = &payload[DATA_OFFSET..DATA_OFFSET + data_len];
    match kind {
        MessageKind::Create if data.is_empty() => {
            return Err(NotOttMessage("create message with empty data"))
        }
        MessageKind::Create if data.len() > MAX_DATA_LEN => {
            return Err(NotOttMessage("create data exceeds the maximum"))
        }
        MessageKind::Revoke if data != [0x00] => {
            return Err(NotOttMessage("revoke data must be a single zero byte"))
        }
        _ => {}
    }

    let key_at = DATA_OFFSET + data_len;
    let public_key = take::<PUBLIC_KEY_LEN>(payload, key_at);
    let anchor =
        (kind == MessageKind::Create).then(|| Digest::new(take(payload, key_at + PUBLIC_KEY_LEN)));
    let sig_at = payload.len() - SIGNATURE_LEN;

    Ok(OttMessage {
        kind,
        data: data.to_vec(),
        public_key,
        anchor,
        signature: Signature::new(take(payload, sig_at)),
        signed: payload[..sig_at].to_vec(),
    })
}

/// Signature under the embedded pk2, then `H(pk2 || anchor) == index`.
pub fn validate_create(msg: &OttMessage, index: &Digest) -> bool {
    let Some(anchor) = msg.anchor() else {
        return false;
    };
    msg.kind == MessageKind::Create
        && crypto::verify(&msg.public_key, &msg.signed, &msg.signature)
        && index::verify_create_binding(&msg.public_key, anchor, index)
}

/// Signature under the embedded pk1, `H(pk1) == anchor`, and
/// `H(pk2 || H(pk1)) == index` against the governing create message.
pub fn validate_revoke(
    msg: &OttMessage,
    create_pk2: &PublicKey,
    create_anchor: &Digest,
    index: &Digest,
) -> bool {
    msg.kind == MessageKind::Revoke
        && crypto::verify(&msg.public_key, &msg.signed, &msg.signature)
        && crypto::hash(&msg.public_key) == *create_anchor
        && index::verify_revoke_binding(&msg.public_key, create_pk2, index)
}
