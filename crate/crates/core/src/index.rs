//! Index derivation and the `did:ott` URI grammar.
//!
//! ```text
//! seed1 -> (sk1, pk1)      anchor = H(pk1)
//! seed2 -> (sk2, pk2)      index  = H(pk2 || anchor)
//! ```
//!
//! The create message publishes `pk2` and `anchor`; the revoke message
//! publishes `pk1`. Only someone holding `seed1` can produce a `pk1` whose
//! hash matches the anchor.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::{self, Digest, PublicKey, Seed, SigningKeyPair};

pub const DID_PREFIX: &str = "did:ott:";
const INDEX_HEX_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DidError {
    #[error("malformed DID `{uri}`: {reason}")]
    MalformedDid { uri: String, reason: &'static str },
}

/// Seeds, ephemeral key pairs, anchor and index that together define
/// ownership of one DID. Holds secrets.
#[derive(Clone, PartialEq, Eq)]
pub struct IndexMaterial {
    seed1: Seed,
    seed2: Seed,
    kp1: SigningKeyPair,
    kp2: SigningKeyPair,
    anchor: Digest,
    index: Digest,
}

impl IndexMaterial {
    pub fn derive(seed1: Seed, seed2: Seed) -> Self {
        let kp1 = crypto::keypair_from_seed(&seed1);
        let kp2 = crypto::keypair_from_seed(&seed2);
        let anchor = crypto::hash(kp1.public());
        let index = crypto::hash_concat(&[kp2.public(), anchor.as_bytes()]);
        Self {
            seed1,
            seed2,
            kp1,
            kp2,
            anchor,
            index,
        }
    }

    /// Derives material from two fresh OS-random seeds.
    pub fn generate() -> Self {
        Self::derive(Seed::random(), Seed::random())
    }

    pub fn seed1(&self) -> &Seed {
        &self.seed1
    }

    pub fn seed2(&self) -> &Seed {
        &self.seed2
    }

    /// (sk1, pk1): signs the revoke message.
    pub fn revocation_key(&self) -> &SigningKeyPair {
        &self.kp1
    }

    /// (sk2, pk2): signs the create message.
    pub fn creation_key(&self) -> &SigningKeyPair {
        &self.kp2
    }

    pub fn anchor(&self) -> &Digest {
        &self.anchor
    }

    pub fn index(&self) -> &Digest {
        &self.index
    }

    pub fn did(&self) -> Did {
        Did::from_index(self.index)
    }
}

impl fmt::Debug for IndexMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexMaterial")
            .field("index", &self.index)
            .field("anchor", &self.anchor)
            .finish_non_exhaustive()
    }
}

pub fn derive_index_material(seed1: Seed, seed2: Seed) -> IndexMaterial {
    IndexMaterial::derive(seed1, seed2)
}

/// `H(pk2 || anchor) == index`
pub fn verify_create_binding(pk2: &PublicKey, anchor: &Digest, index: &Digest) -> bool {
    crypto::hash_concat(&[pk2, anchor.as_bytes()]) == *index
}

/// `H(pk2 || H(pk1)) == index`
pub fn verify_revoke_binding(pk1: &PublicKey, pk2: &PublicKey, index: &Digest) -> bool {
    let anchor = crypto::hash(pk1);
    verify_create_binding(pk2, &anchor, index)
}

/// A parsed `did:ott:<64 lowercase hex>` identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Did {
    index: Digest,
}

impl Did {
    pub fn from_index(index: Digest) -> Self {
        Self { index }
    }

    pub fn index(&self) -> &Digest {
        &self.index
    }

    pub fn method(&self) -> &'static str {
        "ott"
    }

    pub fn uri(&self) -> String {
        format_did(&self.index)
    }
}

impl fmt::Debug for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Did({})", self.uri())
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{DID_PREFIX}{}", self.index.to_hex())
    }
}

impl FromStr for Did {
    type Err = DidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_did(s)
    }
}

fn malformed(uri: &str, reason: &'static str) -> DidError {
    DidError::MalformedDid {
        uri: uri.to_owned(),
        reason,
    }
}

/// Parses a 64-character lowercase hex index with no prefix.
pub fn parse_index_hex(hex_str: &str) -> Result<Digest, DidError> {
    if hex_str.len() != INDEX_HEX_LEN {
        return Err(malformed(hex_str, "index must be 64 hex characters"));
    }
    if !hex_str
        .bytes()
        .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    {
        return Err(malformed(hex_str, "index must be lowercase hexadecimal"));
    }
    let mut bytes = [0u8; 32];
    hex::decode_to_slice(hex_str, &mut bytes)
        .map_err(|_| malformed(hex_str, "index must be lowercase hexadecimal"))?;
    Ok(Digest::new(bytes))
}

pub fn parse_did(uri: &str) -> Result<Did, DidError> {
    let Some(rest) = uri.strip_prefix(DID_PREFIX) else {
        return Err(malformed(uri, "expected prefix `did:ott:`"));
    };
    let index = parse_index_hex(rest).map_err(|e| match e {
        DidError::MalformedDid { reason, .. } => malformed(uri, reason),
    })?;
    Ok(Did { index })
}

pub fn format_did(index: &Digest) -> String {
    format!("{DID_PREFIX}{}", index.to_hex())
}
