//! HTTP routes over an in-memory [`RecordBook`] backed by the log store.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use base64::prelude::{Engine, BASE64_STANDARD};
use ott_core::index::parse_index_hex;
use ott_core::ledger::wire::{
    AttachRequest, AttachResponse, ErrorResponse, HealthResponse, MessageIdsResponse,
    MessageResponse, HEALTH_PATH, MESSAGES_PATH,
};
use ott_core::ledger::{LatencySampler, RecordBook};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;

use crate::store::LogStore;

pub(crate) struct Shared {
    pub(crate) book: RwLock<RecordBook>,
    /// Held across prepare, append and insert so sequences stay dense.
    pub(crate) store: Mutex<LogStore>,
    pub(crate) sampler: LatencySampler,
    pub(crate) max_payload: usize,
}

struct ApiError {
    status: StatusCode,
    body: ErrorResponse,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorResponse {
                error: error.into(),
                max: None,
            },
        }
    }

    fn bad_request(error: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub(crate) fn router(shared: Arc<Shared>) -> Router {
    // The payload limit is enforced on the decoded bytes below; this only
    // bounds what axum will buffer (base64 plus JSON framing).
    let body_limit = shared.max_payload * 4 / 3 + 4096;
    Router::new()
        .route(MESSAGES_PATH, get(list_messages).post(attach))
        .route(&format!("{MESSAGES_PATH}/{{id}}"), get(get_message))
        .route(HEALTH_PATH, get(health))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(shared)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

async fn attach(
    State(shared): State<Arc<Shared>>,
    body: Bytes,
) -> Result<(StatusCode, Json<AttachResponse>), ApiError> {
    let req: AttachRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    let index = parse_index_hex(&req.index)
        .map_err(|e| ApiError::bad_request(format!("malformed index: {e}")))?;
    let payload = BASE64_STANDARD
        .decode(&req.data)
        .map_err(|e| ApiError::bad_request(format!("malformed data: {e}")))?;
    if payload.is_empty() {
        return Err(ApiError::bad_request("empty payload"));
    }
    if payload.len() > shared.max_payload {
        return Err(ApiError {
            status: StatusCode::PAYLOAD_TOO_LARGE,
            body: ErrorResponse {
                error: format!("payload of {} bytes exceeds limit", payload.len()),
                max: Some(shared.max_payload),
            },
        });
    }

    tokio::time::sleep(shared.sampler.attach_delay()).await;

    let worker = Arc::clone(&shared);
    let id = tokio::task::spawn_blocking(move || {
        let mut store = worker.store.lock();
        let record = worker.book.read().prepare(index, payload, now_ms());
        store.append(&record)?;
        let id = record.message_id;
        worker
            .book
            .write()
            .insert(record)
            .expect("prepared record is always the next one");
        Ok::<_, crate::store::StoreError>(id)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| {
        log::error!("append failed: {e}");
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            format!("store failure: {e}"),
        )
    })?;

    Ok((
        StatusCode::CREATED,
        Json(AttachResponse {
            message_id: id.to_hex(),
        }),
    ))
}

#[derive(Deserialize)]
struct IndexQuery {
    index: Option<String>,
}

async fn list_messages(
    State(shared): State<Arc<Shared>>,
    Query(query): Query<IndexQuery>,
) -> Result<Json<MessageIdsResponse>, ApiError> {
    let raw = query
        .index
        .ok_or_else(|| ApiError::bad_request("missing `index` query parameter"))?;
    let index = parse_index_hex(&raw)
        .map_err(|e| ApiError::bad_request(format!("malformed index: {e}")))?;
    tokio::time::sleep(shared.sampler.fetch_delay()).await;
    let ids = shared.book.read().message_ids(&index);
    Ok(Json(MessageIdsResponse {
        message_ids: ids.iter().map(|id| id.to_hex()).collect(),
    }))
}

async fn get_message(
    State(shared): State<Arc<Shared>>,
    Path(raw): Path<String>,
) -> Result<Json<MessageResponse>, ApiError> {
    let id = parse_index_hex(&raw)
        .map_err(|e| ApiError::bad_request(format!("malformed message id: {e}")))?;
    let book = shared.book.read();
    let record = book
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no such message"))?;
    Ok(Json(MessageResponse {
        index: record.index.to_hex(),
        data: BASE64_STANDARD.encode(&record.payload),
        attached_at: record.attached_at,
        seq: record.sequence,
    }))
}

async fn health(State(shared): State<Arc<Shared>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        records: shared.book.read().len() as u64,
    })
}
