//! JSON bodies of the gateway HTTP API (`/api/v1`).
//!
//! Binary fields are lowercase hex (indexes, message ids) or standard
//! base64 (payloads).

use serde::{Deserialize, Serialize};

pub const MESSAGES_PATH: &str = "/api/v1/messages";
pub const HEALTH_PATH: &str = "/api/v1/health";

/// `POST /api/v1/messages`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachRequest {
    pub index: String,
    pub data: String,
}

/// 201 reply to [`AttachRequest`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttachResponse {
    pub message_id: String,
}

/// `GET /api/v1/messages?index=<hex>`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MessageIdsResponse {
    pub message_ids: Vec<String>,
}

/// `GET /api/v1/messages/<messageId>`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MessageResponse {
    pub index: String,
    pub data: String,
    pub attached_at: u64,
    pub seq: u64,
}

/// `GET /api/v1/health`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub records: u64,
}

/// Body of every 4xx/5xx reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<usize>,
}
