//! Locally persisted secrets needed to revoke or update a DID.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::document::{AuthKey, ParseError};
use crate::crypto::Seed;
use crate::index::{parse_did, Did, IndexMaterial};

#[derive(Debug, Error)]
pub enum KeyringError {
    #[error("keyring file {0} already exists")]
    Exists(PathBuf),
    #[error("keyring I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed keyring: {0}")]
    Malformed(String),
    #[error("keyring seeds derive {derived}, but the file names {stated}")]
    Mismatch { stated: Did, derived: Did },
}

/// Everything the owner of a DID must keep: the DID, the seeds behind
/// its index, and the identity key that went into the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DidKeyRing {
    did: Did,
    material: IndexMaterial,
    auth_key: AuthKey,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct KeyringFile {
    did: String,
    seed1: String,
    seed2: String,
    key_type: String,
    auth_key_pem: String,
}

impl DidKeyRing {
    pub fn new(material: IndexMaterial, auth_key: AuthKey) -> Self {
        Self {
            did: material.did(),
            material,
            auth_key,
        }
    }

    pub fn did(&self) -> &Did {
        &self.did
    }

    pub fn material(&self) -> &IndexMaterial {
        &self.material
    }

    pub fn auth_key(&self) -> &AuthKey {
        &self.auth_key
    }

    pub fn to_json(&self) -> String {
        let file = KeyringFile {
            did: self.did.uri(),
            seed1: hex::encode(self.material.seed1().as_bytes()),
            seed2: hex::encode(self.material.seed2().as_bytes()),
            key_type: self.auth_key.key_type().to_owned(),
            auth_key_pem: self.auth_key.to_pem(),
        };
        serde_json::to_string_pretty(&file).expect("keyring serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, KeyringError> {
        let malformed = |e: &dyn std::fmt::Display| KeyringError::Malformed(e.to_string());
        let file: KeyringFile = serde_json::from_str(text).map_err(|e| malformed(&e))?;
        let stated = parse_did(&file.did).map_err(|e| malformed(&e))?;
        let seed = |hex_seed: &str| -> Result<Seed, KeyringError> {
            let bytes = hex::decode(hex_seed).map_err(|e| malformed(&e))?;
            Seed::from_slice(&bytes).map_err(|e| malformed(&e))
        };
        let material = IndexMaterial::derive(seed(&file.seed1)?, seed(&file.seed2)?);
        if material.did() != stated {
            return Err(KeyringError::Mismatch {
                stated,
                derived: material.did(),
            });
        }
        let auth_key = AuthKey::from_pem(file.key_type, &file.auth_key_pem)
            .map_err(|e: ParseError| malformed(&e))?;
        Ok(Self::new(material, auth_key))
    }

    pub fn load(path: &Path) -> Result<Self, KeyringError> {
        let text = fs::read_to_string(path).map_err(|source| KeyringError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Writes a new keyring file, refusing to overwrite an existing one.
    pub fn save_new(&self, path: &Path) -> Result<(), KeyringError> {
        let mut file = secret_file(path, true).map_err(|source| match source.kind() {
            io::ErrorKind::AlreadyExists => KeyringError::Exists(path.to_owned()),
            _ => KeyringError::Io {
                path: path.to_owned(),
                source,
            },
        })?;
        write_all(&mut file, path, self.to_json().as_bytes())
    }

    /// Atomically replaces `path` (write to a sibling temp file, then rename).
    pub fn save_replace(&self, path: &Path) -> Result<(), KeyringError> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let io_err = |source| KeyringError::Io {
            path: tmp.clone(),
            source,
        };
        let mut file = secret_file(&tmp, false).map_err(io_err)?;
        write_all(&mut file, &tmp, self.to_json().as_bytes())?;
        drop(file);
        fs::rename(&tmp, path).map_err(|source| KeyringError::Io {
            path: path.to_owned(),
            source,
        })
    }
}

fn secret_file(path: &Path, create_new: bool) -> io::Result<fs::File> {
    let mut options = OpenOptions::new();
    options.write(true);
    if create_new {
        options.create_new(true);
    } else {
        options.create(true).truncate(true);
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    options.open(path)
}

fn write_all(file: &mut fs::File, path: &Path, bytes: &[u8]) -> Result<(), KeyringError> {
    file.write_all(bytes)
        .and_then(|_| file.write_all(b"\n"))
        .and_then(|_| file.sync_all())
        .map_err(|source| KeyringError::Io {
            path: path.to_owned(),
            source,
        })
}
