//! A stand-in chat-completions service for exercising the remote client.

#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Clone, Debug)]
pub enum Reply {
    /// Reply content, serialized into `choices[0].message.content`.
    Content(Value),
    Status(u16),
    Delay(Duration, Value),
}

#[derive(Default)]
pub struct MockState {
    pub intent: Mutex<Option<Reply>>,
    pub sql: Mutex<Option<Reply>>,
    pub calls: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub auth_headers: Mutex<Vec<String>>,
}

pub struct Mock {
    pub addr: SocketAddr,
    pub state: Arc<MockState>,
    rt: Option<tokio::runtime::Runtime>,
}

impl Mock {
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn set_intent(&self, r: Reply) {
        *self.state.intent.lock().unwrap() = Some(r);
    }

    pub fn set_sql(&self, r: Reply) {
        *self.state.sql.lock().unwrap() = Some(r);
    }
}

impl Drop for Mock {
    fn drop(&mut self) {
        if let Some(rt) = self.rt.take() {
            rt.shutdown_background();
        }
    }
}

async fn complete(State(s): State<Arc<MockState>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    s.calls.fetch_add(1, Ordering::SeqCst);
    let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    s.max_in_flight.fetch_max(now, Ordering::SeqCst);
    if let Some(h) = headers.get("authorization") {
        s.auth_headers.lock().unwrap().push(h.to_str().unwrap_or("").to_string());
    }
    let name = body["response_format"]["json_schema"]["name"].as_str().unwrap_or("");
    let reply = if name == "intent" {
        s.intent.lock().unwrap().clone()
    } else {
        s.sql.lock().unwrap().clone()
    };
    let content = match reply {
        None => None,
        Some(Reply::Status(code)) => {
            s.in_flight.fetch_sub(1, Ordering::SeqCst);
            return (StatusCode::from_u16(code).unwrap(), Json(json!({"error": "mock"}))).into_response();
        }
        Some(Reply::Delay(d, v)) => {
            tokio::time::sleep(d).await;
            Some(v)
        }
        Some(Reply::Content(v)) => Some(v),
    };
    s.in_flight.fetch_sub(1, Ordering::SeqCst);
    match content {
        Some(v) => Json(json!({"choices": [{"message": {"role": "assistant", "content": v.to_string()}}]}))
            .into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": "no reply configured"}))).into_response(),
    }
}

pub fn start() -> Mock {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap();
    let state = Arc::new(MockState::default());
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    let app = Router::new()
        .route("/v1/chat/completions", post(complete))
        .with_state(state.clone());
    rt.spawn(async move {
        axum::serve(listener, app).await.ok();
    });
    Mock {
        addr,
        state,
        rt: Some(rt),
    }
}

pub fn good_intent() -> Value {
    json!({"category": "QoS", "parameter": "encoding_depth", "direction": "Increase", "tx_id": 1, "rx_id": 2})
}
