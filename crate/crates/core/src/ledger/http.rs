use std::time::Duration;

use base64::prelude::{Engine, BASE64_STANDARD};

use super::wire::{
    AttachRequest, AttachResponse, ErrorResponse, HealthResponse, MessageIdsResponse,
    MessageResponse, HEALTH_PATH, MESSAGES_PATH,
};
use super::{check_payload, message_id, Ledger, LedgerError, LedgerRecord, MessageId};
use crate::crypto::Digest;
use crate::index::parse_index_hex;

pub const DEFAULT_NODE_URL: &str = "http://127.0.0.1:14265";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpLedgerConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Extra attempts after an `Unavailable` failure.
    pub retries: u32,
}

impl Default for HttpLedgerConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_NODE_URL.to_owned(),
            timeout: Duration::from_secs(30),
            retries: 0,
        }
    }
}

impl HttpLedgerConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }
}

/// Ledger client for the gateway HTTP API.
#[derive(Debug, Clone)]
pub struct HttpLedger {
    agent: ureq::Agent,
    base: String,
    retries: u32,
}

type Response = ureq::http::Response<ureq::Body>;

impl HttpLedger {
    pub fn new(config: HttpLedgerConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            base: config.base_url.trim_end_matches('/').to_owned(),
            retries: config.retries,
        }
    }

    pub fn connect(base_url: &str) -> Self {
        Self::new(HttpLedgerConfig::new(base_url))
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn health(&self) -> Result<HealthResponse, LedgerError> {
        let resp =
            self.with_retries(|| self.agent.get(format!("{}{HEALTH_PATH}", self.base)).call())?;
        read_ok(resp)
    }

    pub fn message(&self, id: &MessageId) -> Result<Option<LedgerRecord>, LedgerError> {
        let url = format!("{}{MESSAGES_PATH}/{}", self.base, id.to_hex());
        let resp = self.with_retries(|| self.agent.get(&url).call())?;
        if resp.status() == 404 {
            return Ok(None);
        }
        let body: MessageResponse = read_ok(resp)?;
        let index = parse_index_hex(&body.index)
            .map_err(|e| LedgerError::Protocol(format!("bad index in message: {e}")))?;
        let payload = BASE64_STANDARD
            .decode(&body.data)
            .map_err(|e| LedgerError::Protocol(format!("bad base64 payload: {e}")))?;
        if message_id(&index, &payload, body.seq) != *id {
            return Err(LedgerError::Protocol(format!(
                "message {id} does not match its contents"
            )));
        }
        Ok(Some(LedgerRecord {
            message_id: *id,
            index,
            payload,
            attached_at: body.attached_at,
            sequence: body.seq,
        }))
    }

    fn with_retries(
        &self,
        mut call: impl FnMut() -> Result<Response, ureq::Error>,
    ) -> Result<Response, LedgerError> {
        let mut attempt = 0;
        loop {
            let err = match call() {
                Ok(resp) if !resp.status().is_server_error() => return Ok(resp),
                Ok(resp) => error_from(resp),
                Err(e) => LedgerError::Unavailable(e.to_string()),
            };
            if attempt >= self.retries || !matches!(err, LedgerError::Unavailable(_)) {
                return Err(err);
            }
            attempt += 1;
        }
    }
}

fn error_from(mut resp: Response) -> LedgerError {
    let status = resp.status();
    let body: Option<ErrorResponse> = resp.body_mut().read_json().ok();
    let detail = body
        .as_ref()
        .map(|b| b.error.clone())
        .unwrap_or_else(|| status.to_string());
    match status.as_u16() {
        413 => LedgerError::PayloadTooLarge {
            size: 0,
            max: body.and_then(|b| b.max).unwrap_or(0),
        },
        s if s >= 500 => LedgerError::Unavailable(format!("{status}: {detail}")),
        _ => LedgerError::Rejected(format!("{status}: {detail}")),
    }
}

fn read_ok<T: serde::de::DeserializeOwned>(mut resp: Response) -> Result<T, LedgerError> {
    if !resp.status().is_success() {
        return Err(error_from(resp));
    }
    resp.body_mut()
        .read_json()
        .map_err(|e| LedgerError::Protocol(e.to_string()))
}

impl Ledger for HttpLedger {
    fn attach(&self, index: &Digest, payload: &[u8]) -> Result<MessageId, LedgerError> {
        check_payload(payload, usize::MAX)?;
        let body = AttachRequest {
            index: index.to_hex(),
            data: BASE64_STANDARD.encode(payload),
        };
        let url = format!("{}{MESSAGES_PATH}", self.base);
        let resp = self.with_retries(|| self.agent.post(&url).send_json(&body))?;
        let resp: AttachResponse = match read_ok(resp) {
            Err(LedgerError::PayloadTooLarge { max, .. }) => {
                return Err(LedgerError::PayloadTooLarge {
                    size: payload.len(),
                    max,
                })
            }
            other => other?,
        };
        parse_index_hex(&resp.message_id)
            .map_err(|e| LedgerError::Protocol(format!("bad message id: {e}")))
    }

    fn fetch_by_index(&self, index: &Digest) -> Result<Vec<LedgerRecord>, LedgerError> {
        let url = format!("{}{MESSAGES_PATH}", self.base);
        let hex_index = index.to_hex();
        let resp = self.with_retries(|| self.agent.get(&url).query("index", &hex_index).call())?;
        let ids: MessageIdsResponse = read_ok(resp)?;
        let mut records = Vec::with_capacity(ids.message_ids.len());
        for id in &ids.message_ids {
            let id = parse_index_hex(id)
                .map_err(|e| LedgerError::Protocol(format!("bad message id: {e}")))?;
            let record = self
                .message(&id)?
                .ok_or_else(|| LedgerError::Protocol(format!("listed message {id} not found")))?;
            if record.index != *index {
                return Err(LedgerError::Protocol(format!(
                    "message {id} belongs to another index"
                )));
            }
            records.push(record);
        }
        records.sort_by_key(|r| r.sequence);
        Ok(records)
    }
}
