//! Method agility: named DID method tables fetched at run time.
//!
//! A provider registers one or more [`MethodTable`]s, each exposing the
//! same four functions. An application fetches a table by method name
//! (`"OTT"`) and drives the DID lifecycle without knowing which ledger
//! sits underneath.
//!
//! Table functions report integer status codes (see [`status`]): `1` on
//! success, `0` on unspecified failure, negative values for specific
//! errors.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use thiserror::Error;

use crate::crypto::{Seed, PUBLIC_KEY_LEN};
use crate::index::{parse_did, parse_index_hex, Did};
use crate::ledger::{Ledger, LedgerError};
use crate::method::{
    self, serialize_document, AuthKey, DidKeyRing, MethodError, ResolutionResult, ResolutionStatus,
    DEFAULT_KEY_TYPE,
};

/// Operation number of the DID operation family.
pub const OP_DID: i32 = 24;

/// Function identifiers within the DID operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i32)]
pub enum DidFunction {
    Create = 1,
    Resolve = 2,
    Update = 3,
    Revoke = 4,
}

impl DidFunction {
    pub const ALL: [DidFunction; 4] = [
        DidFunction::Create,
        DidFunction::Resolve,
        DidFunction::Update,
        DidFunction::Revoke,
    ];

    pub fn id(self) -> i32 {
        self as i32
    }

    pub fn name(self) -> &'static str {
        match self {
            DidFunction::Create => "did_create",
            DidFunction::Resolve => "did_resolve",
            DidFunction::Update => "did_update",
            DidFunction::Revoke => "did_revoke",
        }
    }
}

pub mod status {
    pub const OK: i32 = 1;
    pub const FAILURE: i32 = 0;
    pub const REVOKED: i32 = -1;
    pub const NOT_FOUND: i32 = -2;
    pub const INVALID: i32 = -3;
    pub const LEDGER_UNAVAILABLE: i32 = -4;
    pub const MALFORMED_DID: i32 = -5;
    /// The provider holds no keyring for the DID.
    pub const UNKNOWN_DID: i32 = -6;
    pub const PARTIAL_UPDATE: i32 = -7;
    pub const DOCUMENT_TOO_LARGE: i32 = -8;
    pub const UNSUPPORTED_KEY: i32 = -9;
}

/// What a table's create function hands back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DidHandle {
    uri: String,
    keyring: Option<DidKeyRing>,
}

impl DidHandle {
    pub fn new(uri: impl Into<String>) -> Self {
        Self {
            uri: uri.into(),
            keyring: None,
        }
    }

    pub fn with_keyring(keyring: DidKeyRing) -> Self {
        Self {
            uri: keyring.did().uri(),
            keyring: Some(keyring),
        }
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn keyring(&self) -> Option<&DidKeyRing> {
        self.keyring.as_ref()
    }
}

/// `create(key material, key type) -> handle`
pub type CreateFn = dyn Fn(&[u8], &str) -> Result<DidHandle, i32> + Send + Sync;
/// `resolve(index, document out) -> status`; the document is canonical JSON.
pub type ResolveFn = dyn Fn(&str, &mut Vec<u8>) -> i32 + Send + Sync;
/// `update(index in/out, key material, key type) -> status`; on success the
/// index string is replaced by the new DID.
pub type UpdateFn = dyn Fn(&mut String, &[u8], &str) -> i32 + Send + Sync;
/// `revoke(index) -> status`
pub type RevokeFn = dyn Fn(&str) -> i32 + Send + Sync;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("provider `{provider}` offers method `{method}` more than once")]
    DuplicateMethodWithinProvider { provider: String, method: String },
    #[error("method table `{method}` is missing its {missing} function")]
    InvalidTable {
        method: String,
        missing: &'static str,
    },
    #[error("no provider offers DID method `{0}`")]
    MethodNotFound(String),
}

/// The four functions of one DID method, as registered by a provider.
#[derive(Clone)]
pub struct MethodTable {
    method_name: String,
    provider_name: String,
    create: Arc<CreateFn>,
    resolve: Arc<ResolveFn>,
    update: Arc<UpdateFn>,
    revoke: Arc<RevokeFn>,
}

impl fmt::Debug for MethodTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MethodTable")
            .field("method_name", &self.method_name)
            .field("provider_name", &self.provider_name)
            .finish_non_exhaustive()
    }
}

impl MethodTable {
    pub fn builder(method_name: impl Into<String>) -> MethodTableBuilder {
        MethodTableBuilder {
            method_name: method_name.into(),
            create: None,
            resolve: None,
            update: None,
            revoke: None,
        }
    }

    pub fn method_name(&self) -> &str {
        &self.method_name
    }

    /// Empty until the table is registered.
    pub fn provider_name(&self) -> &str {
        &self.provider_name
    }

    pub fn create(&self, key: &[u8], key_type: &str) -> Result<DidHandle, i32> {
        (self.create)(key, key_type)
    }

    pub fn resolve(&self, index: &str, document: &mut Vec<u8>) -> i32 {
        (self.resolve)(index, document)
    }

    pub fn update(&self, index: &mut String, key: &[u8], key_type: &str) -> i32 {
        (self.update)(index, key, key_type)
    }

    pub fn revoke(&self, index: &str) -> i32 {
        (self.revoke)(index)
    }
}

pub struct MethodTableBuilder {
    method_name: String,
    create: Option<Arc<CreateFn>>,
    resolve: Option<Arc<ResolveFn>>,
    update: Option<Arc<UpdateFn>>,
    revoke: Option<Arc<RevokeFn>>,
}

impl MethodTableBuilder {
    pub fn create(
        mut self,
        f: impl Fn(&[u8], &str) -> Result<DidHandle, i32> + Send + Sync + 'static,
    ) -> Self {
        self.create = Some(Arc::new(f));
        self
    }

    pub fn resolve(
        mut self,
        f: impl Fn(&str, &mut Vec<u8>) -> i32 + Send + Sync + 'static,
    ) -> Self {
        self.resolve = Some(Arc::new(f));
        self
    }

    pub fn update(
        mut self,
        f: impl Fn(&mut String, &[u8], &str) -> i32 + Send + Sync + 'static,
    ) -> Self {
        self.update = Some(Arc::new(f));
        self
    }

    pub fn revoke(mut self, f: impl Fn(&str) -> i32 + Send + Sync + 'static) -> Self {
        self.revoke = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> Result<MethodTable, RegistryError> {
        let missing = |what| RegistryError::InvalidTable {
            method: self.method_name.clone(),
            missing: what,
        };
        Ok(MethodTable {
            create: self.create.clone().ok_or_else(|| missing("create"))?,
            resolve: self.resolve.clone().ok_or_else(|| missing("resolve"))?,
            update: self.update.clone().ok_or_else(|| missing("update"))?,
            revoke: self.revoke.clone().ok_or_else(|| missing("revoke"))?,
            provider_name: String::new(),
            method_name: self.method_name,
        })
    }
}

struct ProviderEntry {
    name: String,
    tables: Vec<Arc<MethodTable>>,
    registered: u64,
}

/// A registry of providers, playing the role of a library context.
#[derive(Default)]
pub struct Registry {
    providers: RwLock<Vec<ProviderEntry>>,
    registrations: AtomicU64,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("methods", &self.list_methods())
            .finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers (or atomically replaces) a provider's tables.
    pub fn register_provider(
        &self,
        provider_name: &str,
        tables: Vec<MethodTable>,
    ) -> Result<(), RegistryError> {
        let mut seen = std::collections::HashSet::new();
        for table in &tables {
            if !seen.insert(table.method_name.as_str()) {
                return Err(RegistryError::DuplicateMethodWithinProvider {
                    provider: provider_name.to_owned(),
                    method: table.method_name.clone(),
                });
            }
        }
        let tables = tables
            .into_iter()
            .map(|mut t| {
                t.provider_name = provider_name.to_owned();
                Arc::new(t)
            })
            .collect();

        let mut providers = self.providers.write();
        let registered = self.registrations.fetch_add(1, Ordering::Relaxed);
        match providers.iter_mut().find(|p| p.name == provider_name) {
            Some(entry) => {
                entry.tables = tables;
                entry.registered = registered;
            }
            None => providers.push(ProviderEntry {
                name: provider_name.to_owned(),
                tables,
                registered,
            }),
        }
        Ok(())
    }

    /// The table for `method_name` from the most recently registered
    /// provider offering it.
    pub fn fetch(&self, method_name: &str) -> Result<Arc<MethodTable>, RegistryError> {
        self.fetch_matching(method_name, None)
    }

    /// Like [`fetch`](Self::fetch), restricted to one provider.
    pub fn fetch_from(
        &self,
        method_name: &str,
        provider_name: &str,
    ) -> Result<Arc<MethodTable>, RegistryError> {
        self.fetch_matching(method_name, Some(provider_name))
    }

    fn fetch_matching(
        &self,
        method_name: &str,
        provider_name: Option<&str>,
    ) -> Result<Arc<MethodTable>, RegistryError> {
        let providers = self.providers.read();
        providers
            .iter()
            .filter(|p| provider_name.is_none_or(|name| p.name == name))
            .filter_map(|p| {
                p.tables
                    .iter()
                    .find(|t| t.method_name == method_name)
                    .map(|t| (p.registered, t))
            })
            .max_by_key(|(registered, _)| *registered)
            .map(|(_, t)| Arc::clone(t))
            .ok_or_else(|| RegistryError::MethodNotFound(method_name.to_owned()))
    }

    /// `(provider, method)` pairs in provider then table order.
    pub fn list_methods(&self) -> Vec<(String, String)> {
        self.providers
            .read()
            .iter()
            .flat_map(|p| {
                p.tables
                    .iter()
                    .map(|t| (p.name.clone(), t.method_name.clone()))
            })
            .collect()
    }
}

/// Where the OTT provider gets seeds and document timestamps.
pub trait CreateSource: Send + Sync {
    fn seeds(&self) -> (Seed, Seed);

    fn timestamp(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// OS random seeds and the system clock.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemSource;

impl CreateSource for SystemSource {
    fn seeds(&self) -> (Seed, Seed) {
        (Seed::random(), Seed::random())
    }
}

/// Maps a resolution onto the integer interface: the canonical document
/// for `Valid`, `{}` for `Revoked`, nothing otherwise.
pub fn resolution_status(result: &ResolutionResult, document: &mut Vec<u8>) -> i32 {
    document.clear();
    match result.status {
        ResolutionStatus::Valid => {
            let doc = result
                .document
                .as_ref()
                .expect("valid results carry a document");
            document.extend_from_slice(&serialize_document(doc));
            status::OK
        }
        ResolutionStatus::Revoked => {
            document.extend_from_slice(b"{}");
            status::REVOKED
        }
        ResolutionStatus::NotFound => status::NOT_FOUND,
        ResolutionStatus::Invalid => status::INVALID,
    }
}

fn method_error_status(e: &MethodError) -> i32 {
    match e {
        MethodError::Ledger(LedgerError::Unavailable(_)) => status::LEDGER_UNAVAILABLE,
        MethodError::Ledger(_) => status::FAILURE,
        MethodError::DocumentTooLarge(_) => status::DOCUMENT_TOO_LARGE,
        MethodError::EmptyAuthKey | MethodError::UnsupportedKeyType(_) => status::UNSUPPORTED_KEY,
        MethodError::AlreadyRevoked(_) => status::REVOKED,
        MethodError::PartialUpdate { .. } => status::PARTIAL_UPDATE,
    }
}

/// Accepts `did:ott:<hex>` or the bare 64-character index.
pub fn parse_index_arg(index: &str) -> Option<Did> {
    parse_did(index)
        .ok()
        .or_else(|| parse_index_hex(index).ok().map(Did::from_index))
}

/// A bare 32-byte key with an Ed25519 label is wrapped as SPKI; anything
/// else is taken to be SPKI DER already.
pub fn auth_key_from_material(key: &[u8], key_type: &str) -> AuthKey {
    if key.len() == PUBLIC_KEY_LEN && key_type.starts_with("Ed25519") {
        let mut raw = [0u8; PUBLIC_KEY_LEN];
        raw.copy_from_slice(key);
        let mut auth = AuthKey::ed25519(&raw);
        if key_type != DEFAULT_KEY_TYPE {
            auth = AuthKey::new(key_type, auth.der().to_vec());
        }
        auth
    } else {
        AuthKey::new(key_type, key.to_vec())
    }
}

/// The OTT method over a ledger, holding keyrings for the DIDs it created.
pub struct OttProvider {
    ledger: Arc<dyn Ledger>,
    source: Box<dyn CreateSource>,
    keyrings: Mutex<HashMap<Did, DidKeyRing>>,
}

impl OttProvider {
    pub const METHOD_NAME: &'static str = "OTT";
    pub const PROVIDER_NAME: &'static str = "didprovider";

    pub fn new(ledger: Arc<dyn Ledger>) -> Arc<Self> {
        Self::with_source(ledger, Box::new(SystemSource))
    }

    pub fn with_source(ledger: Arc<dyn Ledger>, source: Box<dyn CreateSource>) -> Arc<Self> {
        Arc::new(Self {
            ledger,
            source,
            keyrings: Mutex::new(HashMap::new()),
        })
    }

    /// Lets the provider revoke/update a DID created elsewhere.
    pub fn import_keyring(&self, keyring: DidKeyRing) {
        self.keyrings.lock().insert(*keyring.did(), keyring);
    }

    pub fn keyring(&self, did: &Did) -> Option<DidKeyRing> {
        self.keyrings.lock().get(did).cloned()
    }

    fn create(&self, key: &[u8], key_type: &str) -> Result<DidHandle, i32> {
        let (s1, s2) = self.source.seeds();
        let auth = auth_key_from_material(key, key_type);
        let keyring = method::create_with(s1, s2, self.source.timestamp(), &auth, &*self.ledger)
            .map_err(|e| method_error_status(&e))?;
        self.import_keyring(keyring.clone());
        Ok(DidHandle::with_keyring(keyring))
    }

    fn resolve(&self, index: &str, document: &mut Vec<u8>) -> i32 {
        document.clear();
        let Some(did) = parse_index_arg(index) else {
            return status::MALFORMED_DID;
        };
        match method::resolve(&did, &*self.ledger) {
            Ok(result) => resolution_status(&result, document),
            Err(LedgerError::Unavailable(_)) => status::LEDGER_UNAVAILABLE,
            Err(_) => status::FAILURE,
        }
    }

    fn update(&self, index: &mut String, key: &[u8], key_type: &str) -> i32 {
        let Some(did) = parse_index_arg(index) else {
            return status::MALFORMED_DID;
        };
        let Some(old) = self.keyring(&did) else {
            return status::UNKNOWN_DID;
        };
        let (s1, s2) = self.source.seeds();
        let auth = auth_key_from_material(key, key_type);
        match method::update_with(&old, s1, s2, self.source.timestamp(), &auth, &*self.ledger) {
            Ok(new) => {
                *index = new.did().uri();
                self.import_keyring(new);
                status::OK
            }
            Err(e) => method_error_status(&e),
        }
    }

    fn revoke(&self, index: &str) -> i32 {
        let Some(did) = parse_index_arg(index) else {
            return status::MALFORMED_DID;
        };
        let Some(keyring) = self.keyring(&did) else {
            return status::UNKNOWN_DID;
        };
        match method::revoke(&keyring, &*self.ledger) {
            Ok(_) => status::OK,
            Err(e) => method_error_status(&e),
        }
    }

    /// The provider's function table, named `"OTT"`.
    pub fn table(self: &Arc<Self>) -> MethodTable {
        let (c, r, u, v) = (self.clone(), self.clone(), self.clone(), self.clone());
        MethodTable::builder(Self::METHOD_NAME)
            .create(move |key, key_type| c.create(key, key_type))
            .resolve(move |index, out| r.resolve(index, out))
            .update(move |index, key, key_type| u.update(index, key, key_type))
            .revoke(move |index| v.revoke(index))
            .build()
            .expect("all four functions supplied")
    }

    /// Registers the OTT table under [`Self::PROVIDER_NAME`].
    pub fn register(self: &Arc<Self>, registry: &Registry) -> Result<(), RegistryError> {
        registry.register_provider(Self::PROVIDER_NAME, vec![self.table()])
    }
}
