//! Hashing and signature primitives.
//!
//! Everything in the method is built from two functions: BLAKE2b with a
//! 32-byte digest, and pure Ed25519 (no prehash, empty context).

use std::fmt;

use blake2::digest::consts::U32;
use blake2::{Blake2b, Digest as _};
use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};

use thiserror::Error;

type Blake2b256 = Blake2b<U32>;

pub const SEED_LEN: usize = 32;
pub const DIGEST_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;

/// Raw Ed25519 public key bytes.
pub type PublicKey = [u8; PUBLIC_KEY_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("expected {expected} bytes, got {actual}")]
pub struct LengthError {
    pub expected: usize,
    pub actual: usize,
}

fn fixed<const N: usize>(bytes: &[u8]) -> Result<[u8; N], LengthError> {
    bytes.try_into().map_err(|_| LengthError {
        expected: N,
        actual: bytes.len(),
    })
}

/// A 32-byte secret seed for an Ed25519 key pair.
#[derive(Clone, PartialEq, Eq)]
pub struct Seed([u8; SEED_LEN]);

impl Seed {
    pub const fn new(bytes: [u8; SEED_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, LengthError> {
        fixed(bytes).map(Self)
    }

    /// Draws a seed from the operating system's random source.
    pub fn random() -> Self {
        let mut bytes = [0u8; SEED_LEN];
        getrandom::fill(&mut bytes).expect("operating system random source unavailable");
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SEED_LEN] {
        &self.0
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Seed(<redacted>)")
    }
}

/// A 32-byte BLAKE2b-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const fn new(bytes: [u8; DIGEST_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, LengthError> {
        fixed(bytes).map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// A 64-byte Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature([u8; SIGNATURE_LEN]);

impl Signature {
    pub const fn new(bytes: [u8; SIGNATURE_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, LengthError> {
        fixed(bytes).map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(self.0))
    }
}

/// Ed25519 key pair; `secret` is the 32-byte RFC 8032 seed.
#[derive(Clone, PartialEq, Eq)]
pub struct SigningKeyPair {
    secret: Seed,
    public: PublicKey,
}

impl SigningKeyPair {
    pub fn secret(&self) -> &Seed {
        &self.secret
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }
}

impl fmt::Debug for SigningKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningKeyPair")
            .field("public", &hex::encode(self.public))
            .finish_non_exhaustive()
    }
}

/// BLAKE2b-256 of `data`.
pub fn hash(data: &[u8]) -> Digest {
    Digest(Blake2b256::digest(data).into())
}

/// BLAKE2b-256 over the concatenation of `parts`, without allocating.
pub fn hash_concat(parts: &[&[u8]]) -> Digest {
    let mut hasher = Blake2b256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

pub fn keypair_from_seed(seed: &Seed) -> SigningKeyPair {
    let public = SigningKey::from_bytes(seed.as_bytes())
        .verifying_key()
        .to_bytes();
    SigningKeyPair {
        secret: seed.clone(),
        public,
    }
}

pub fn sign(secret: &Seed, message: &[u8]) -> Signature {
    Signature(
        SigningKey::from_bytes(secret.as_bytes())
            .sign(message)
            .to_bytes(),
    )
}

/// Returns false for malformed public keys as well as bad signatures.
pub fn verify(public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    let Ok(key) = VerifyingKey::from_bytes(public) else {
        return false;
    };
    key.verify(message, &ed25519_dalek::Signature::from_bytes(&sig.0))
        .is_ok()
}
