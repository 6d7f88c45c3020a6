//! DID documents and the authentication key they publish.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::PublicKey;
use crate::index::{parse_did, Did};

pub const DID_CONTEXT: &str = "https://www.w3.org/ns/did/v1";
pub const DEFAULT_KEY_TYPE: &str = "Ed25519VerificationKey2020";
pub const KEY_FRAGMENT: &str = "#keys-0";
const PEM_LABEL: &str = "PUBLIC KEY";

/// Verification method types accepted by `create`.
pub const KNOWN_KEY_TYPES: &[&str] = &[
    "Ed25519VerificationKey2020",
    "Ed25519VerificationKey2018",
    "EcdsaSecp256k1VerificationKey2019",
    "JsonWebKey2020",
    "RsaVerificationKey2018",
];

/// DER prefix of an Ed25519 SubjectPublicKeyInfo (OID 1.3.101.112).
const ED25519_SPKI_PREFIX: [u8; 12] = [
    0x30, 0x2a, 0x30, 0x05, 0x06, 0x03, 0x2b, 0x65, 0x70, 0x03, 0x21, 0x00,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid DID document at `{path}`: {message}")]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl ParseError {
    fn at(path: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.to_owned(),
            message: message.into(),
        }
    }
}

/// The identity key (pk_id) published in a document: algorithm label plus
/// SubjectPublicKeyInfo DER. Not interpreted beyond PEM wrapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthKey {
    key_type: String,
    spki_der: Vec<u8>,
}

impl AuthKey {
    pub fn new(key_type: impl Into<String>, spki_der: Vec<u8>) -> Self {
        Self {
            key_type: key_type.into(),
            spki_der,
        }
    }

    pub fn ed25519(public: &PublicKey) -> Self {
        let mut der = ED25519_SPKI_PREFIX.to_vec();
        der.extend_from_slice(public);
        Self::new(DEFAULT_KEY_TYPE, der)
    }

    /// Reads a `PUBLIC KEY` PEM block.
    pub fn from_pem(key_type: impl Into<String>, pem_text: &str) -> Result<Self, ParseError> {
        let block =
            pem::parse(pem_text).map_err(|e| ParseError::at("publicKeyPem", e.to_string()))?;
        if block.tag() != PEM_LABEL {
            return Err(ParseError::at(
                "publicKeyPem",
                format!("expected a `{PEM_LABEL}` block, found `{}`", block.tag()),
            ));
        }
        Ok(Self::new(key_type, block.into_contents()))
    }

    pub fn key_type(&self) -> &str {
        &self.key_type
    }

    pub fn der(&self) -> &[u8] {
        &self.spki_der
    }

    pub fn to_pem(&self) -> String {
        let block = pem::Pem::new(PEM_LABEL, self.spki_der.clone());
        pem::encode_config(
            &block,
            pem::EncodeConfig::new().set_line_ending(pem::LineEnding::LF),
        )
    }

    /// The raw key when the DER is an Ed25519 SubjectPublicKeyInfo.
    pub fn ed25519_public_key(&self) -> Option<PublicKey> {
        self.spki_der
            .strip_prefix(&ED25519_SPKI_PREFIX[..])
            .and_then(|rest| rest.try_into().ok())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthenticationMethod {
    pub id: String,
    #[serde(rename = "type")]
    pub key_type: String,
    pub controller: String,
    #[serde(rename = "publicKeyPem")]
    pub public_key_pem: String,
}

/// Field order here is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DidDocument {
    #[serde(rename = "@context")]
    pub context: Vec<String>,
    pub id: String,
    pub created: String,
    #[serde(rename = "authenticationMethod")]
    pub authentication_method: AuthenticationMethod,
}

pub fn format_created(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl DidDocument {
    pub fn new(did: &Did, created: DateTime<Utc>, key: &AuthKey) -> Self {
        let id = did.uri();
        Self {
            context: vec![DID_CONTEXT.to_owned()],
            authentication_method: AuthenticationMethod {
                id: format!("{id}{KEY_FRAGMENT}"),
                key_type: key.key_type().to_owned(),
                controller: id.clone(),
                public_key_pem: key.to_pem(),
            },
            created: format_created(created),
            id,
        }
    }

    pub fn did(&self) -> Result<Did, ParseError> {
        parse_did(&self.id).map_err(|e| ParseError::at("id", e.to_string()))
    }

    pub fn auth_key(&self) -> Result<AuthKey, ParseError> {
        let method = &self.authentication_method;
        AuthKey::from_pem(&method.key_type, &method.public_key_pem)
            .map_err(|e| ParseError::at("authenticationMethod.publicKeyPem", e.message))
    }

    fn check(&self) -> Result<(), ParseError> {
        if self.context.as_slice() != [DID_CONTEXT] {
            return Err(ParseError::at(
                "@context",
                format!("must be [\"{DID_CONTEXT}\"]"),
            ));
        }
        self.did()?;
        let method = &self.authentication_method;
        if method.id != format!("{}{KEY_FRAGMENT}", self.id) {
            return Err(ParseError::at(
                "authenticationMethod.id",
                format!("must be the document id followed by `{KEY_FRAGMENT}`"),
            ));
        }
        if method.controller != self.id {
            return Err(ParseError::at(
                "authenticationMethod.controller",
                "must equal the document id",
            ));
        }
        DateTime::parse_from_rfc3339(&self.created)
            .map_err(|e| ParseError::at("created", e.to_string()))?;
        self.auth_key()?;
        Ok(())
    }
}

/// Compact UTF-8 JSON with keys in canonical order.
pub fn serialize_document(doc: &DidDocument) -> Vec<u8> {
    serde_json::to_vec(doc).expect("document serialization is infallible")
}

pub fn parse_document(bytes: &[u8]) -> Result<DidDocument, ParseError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: DidDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ParseError {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    doc.check()?;
    Ok(doc)
}
