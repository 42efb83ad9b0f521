use std::collections::HashMap;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::orchestrator::{Event, Orchestrator};
use crate::phy::MetricsSnapshot;
use crate::store::LinkRecord;

/// Longest long-poll wait a client may ask for.
pub const MAX_POLL_MS: u64 = 60_000;

/// Shared handler state; empty until seeding and calibration finish.
#[derive(Clone, Default)]
pub struct AppState {
    orch: Arc<OnceLock<Arc<Orchestrator>>>,
}

impl AppState {
    pub fn pending() -> Self {
        AppState::default()
    }

    pub fn ready(orch: Arc<Orchestrator>) -> Self {
        let s = AppState::default();
        s.set(orch);
        s
    }

    pub fn set(&self, orch: Arc<Orchestrator>) {
        let _ = self.orch.set(orch);
    }

    pub fn get(&self) -> Option<&Arc<Orchestrator>> {
        self.orch.get()
    }

    fn orch(&self) -> Result<Arc<Orchestrator>, ApiError> {
        self.get().cloned().ok_or_else(|| {
            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "not_ready", "seeding and calibration in progress")
        })
    }
}

/// `{"error": {"code": ..., "message": ...}}`
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub user_id: String,
    pub text: String,
}

/// A link row with its current surrogate metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    #[serde(flatten)]
    pub link: LinkRecord,
    pub metrics: MetricsSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub events: Vec<Event>,
    /// Pass as `since` on the next poll.
    pub last_seq: u64,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/requests", post(submit))
        .route("/api/v1/links", get(links))
        .route("/api/v1/links/{id}", get(link))
        .route("/api/v1/metrics/history", get(history))
        .route("/api/v1/events", get(events))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
        })
        .with_state(state)
}

async fn healthz(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(o) => Json(json!({
            "status": "ok",
            "links": o.links().map(|l| l.len()).unwrap_or(0),
            "last_seq": o.events().last_seq()
        }))
        .into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"status": "starting"}))).into_response(),
    }
}

async fn submit(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let orch = state.orch()?;
    let req: SubmitRequest = serde_json::from_slice(&body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_field", e.to_string())
        }
        _ => ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()),
    })?;
    if req.user_id.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_field", "user_id must not be empty"));
    }
    let outcome = tokio::task::spawn_blocking(move || orch.handle_request(&req.user_id, &req.text))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(outcome).into_response())
}

fn view(orch: &Orchestrator, link: LinkRecord) -> Result<LinkView, ApiError> {
    let metrics = orch
        .metrics_for(&link, orch.now_ms())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(LinkView { link, metrics })
}

async fn links(State(state): State<AppState>) -> Result<Json<Vec<LinkView>>, ApiError> {
    let orch = state.orch()?;
    let links = orch.links().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(links.into_iter().map(|l| view(&orch, l)).collect::<Result<_, _>>()?))
}

async fn link(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<LinkView>, ApiError> {
    let orch = state.orch()?;
    let id: i64 = id
        .parse()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_parameter", format!("link id `{id}` is not an integer")))?;
    let link = orch
        .link(id)
        .map_err(|e| ApiError::internal(e.to_string()))?
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no link {id}")))?;
    Ok(Json(view(&orch, link)?))
}

fn int_param(q: &HashMap<String, String>, name: &str) -> Result<Option<u64>, ApiError> {
    q.get(name)
        .map(|v| {
            v.parse().map_err(|_| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "invalid_parameter",
                    format!("`{name}` must be a non-negative integer"),
                )
            })
        })
        .transpose()
}

async fn history(
    State(state): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<MetricsSnapshot>>, ApiError> {
    let orch = state.orch()?;
    let link_id = int_param(&q, "link_id")?.map(|v| v as i64);
    Ok(Json(orch.metrics_history(link_id)))
}

async fn events(
    State(state): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<EventBatch>, ApiError> {
    let orch = state.orch()?;
    let since = int_param(&q, "since")?.unwrap_or(0);
    let wait = Duration::from_millis(int_param(&q, "timeout_ms")?.unwrap_or(0).min(MAX_POLL_MS));
    let events = tokio::task::spawn_blocking(move || orch.events().since(since, wait))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let last_seq = events.last().map_or(since, |e| e.seq);
    Ok(Json(EventBatch { events, last_seq }))
}
