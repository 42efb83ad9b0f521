//! Chat-completions client for the optional remote intent and SQL backends.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use super::RemoteConfig;
use crate::intent::{Intent, IntentBackend, IntentError, LinkTarget, RemoteIntentReply, SchemaLinkage};
use crate::nl2sql::{SqlBackend, SqlRequest, StatementKind};
use crate::orchestrator::{AuditLog, RemoteExchange};

const REDACTED: &str = "[REDACTED]";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemoteError {
    #[error("no reply within {0} ms")]
    Timeout(u64),
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("reply failed schema validation: {0}")]
    SchemaValidationError(String),
    #[error("transport error: {0}")]
    Transport(String),
}

/// Counting semaphore capping in-flight calls.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteClient {
    http: reqwest::blocking::Client,
    url: String,
    model: String,
    timeout_ms: u64,
    token: String,
    slots: Slots,
    audit: Option<Arc<AuditLog>>,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("timeout_ms", &self.timeout_ms)
            .field("token", &REDACTED)
            .finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(
        config: &RemoteConfig,
        token: String,
        audit: Option<Arc<AuditLog>>,
    ) -> Result<Self, RemoteError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(RemoteClient {
            http,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            timeout_ms: config.timeout_ms,
            token,
            slots: Slots {
                free: Mutex::new(config.max_concurrency.max(1)),
                cv: Condvar::new(),
            },
            audit,
        })
    }

    fn redact(&self, v: Value) -> Value {
        if self.token.is_empty() {
            return v;
        }
        let text = v.to_string();
        if !text.contains(&self.token) {
            return v;
        }
        serde_json::from_str(&text.replace(&self.token, REDACTED)).unwrap_or(Value::Null)
    }

    /// One exchange whose reply content must be a JSON object.
    pub fn complete_json(
        &self,
        backend: &str,
        system: &str,
        user: &str,
        schema_name: &str,
        schema: Value,
    ) -> Result<Value, RemoteError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user}
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": schema_name, "strict": true, "schema": schema}
            }
        });
        let _slot = self.slots.acquire();
        let started = Instant::now();
        let (response, result) = self.send(&body);
        if let Some(audit) = &self.audit {
            audit.record_exchange(RemoteExchange {
                backend: backend.to_string(),
                url: self.url.clone(),
                request: self.redact(body),
                response: response.map(|r| self.redact(r)),
                error: result.as_ref().err().map(|e| e.to_string().replace(&self.token, REDACTED)),
                elapsed_ms: started.elapsed().as_millis() as u64,
            });
        }
        result
    }

    fn send(&self, body: &Value) -> (Option<Value>, Result<Value, RemoteError>) {
        let resp = match self.http.post(&self.url).bearer_auth(&self.token).json(body).send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return (None, Err(RemoteError::Timeout(self.timeout_ms))),
            Err(e) => return (None, Err(RemoteError::Transport(e.without_url().to_string()))),
        };
        let status = resp.status();
        let parsed: Result<Value, _> = resp.json();
        let raw = parsed.as_ref().ok().cloned();
        if !status.is_success() {
            return (raw, Err(RemoteError::HttpError(status.as_u16())));
        }
        let result = match parsed {
            Err(e) if e.is_timeout() => Err(RemoteError::Timeout(self.timeout_ms)),
            Err(e) => Err(RemoteError::SchemaValidationError(format!("body is not JSON: {e}"))),
            Ok(v) => extract_content(&v),
        };
        (raw, result)
    }
}

/// `choices[0].message.content`, parsed as a JSON object.
fn extract_content(v: &Value) -> Result<Value, RemoteError> {
    let bad = |m: &str| RemoteError::SchemaValidationError(m.to_string());
    let content = v
        .pointer("/choices/0/message/content")
        .ok_or_else(|| bad("missing choices[0].message.content"))?;
    let doc = match content {
        Value::String(s) => serde_json::from_str(s).map_err(|e| bad(&format!("content is not JSON: {e}")))?,
        Value::Object(_) => content.clone(),
        _ => return Err(bad("content is neither a string nor an object")),
    };
    if !doc.is_object() {
        return Err(bad("content is not a JSON object"));
    }
    Ok(doc)
}

fn intent_prompt(linkage: &SchemaLinkage, default_target: LinkTarget) -> String {
    let mut params: Vec<String> = linkage
        .entries
        .values()
        .flatten()
        .map(|e| format!("{} ({} in {}.{})", e.metric, e.parameter, e.table, e.column))
        .collect();
    params.sort();
    params.dedup();
    format!(
        "Classify a wireless-network user request. category is one of QoS, Security, Mobility. \
         parameter is the tunable column that serves the request; known metrics: {}. \
         direction is Increase or Decrease for that parameter. Unless the request names \
         \"transmitter X and receiver Y\", use tx_id {} and rx_id {}. Reply with JSON only.",
        params.join(", "),
        default_target.tx_id,
        default_target.rx_id
    )
}

pub struct RemoteIntentBackend {
    client: Arc<RemoteClient>,
    linkage: SchemaLinkage,
}

impl RemoteIntentBackend {
    pub fn new(client: Arc<RemoteClient>, linkage: SchemaLinkage) -> Self {
        RemoteIntentBackend { client, linkage }
    }

    /// Intent from the remote model, validated against the linkage.
    pub fn request_intent(&self, text: &str, default_target: LinkTarget) -> Result<Intent, RemoteError> {
        let raw = self.client.complete_json(
            "intent",
            &intent_prompt(&self.linkage, default_target),
            text,
            "intent",
            RemoteIntentReply::json_schema(),
        )?;
        RemoteIntentReply::validate(&raw, &self.linkage, text)
            .map_err(|e| RemoteError::SchemaValidationError(e.to_string()))
    }
}

impl IntentBackend for RemoteIntentBackend {
    fn name(&self) -> &str {
        "remote-intent"
    }

    fn analyze(&self, text: &str, default_target: LinkTarget) -> Result<Intent, IntentError> {
        self.request_intent(text, default_target).map_err(|e| match e {
            RemoteError::SchemaValidationError(m) => IntentError::MalformedRemoteReply(m),
            other => IntentError::RemoteUnavailable(other.to_string()),
        })
    }
}

pub struct RemoteSqlBackend {
    client: Arc<RemoteClient>,
}

impl RemoteSqlBackend {
    pub fn new(client: Arc<RemoteClient>) -> Self {
        RemoteSqlBackend { client }
    }
}

impl SqlBackend for RemoteSqlBackend {
    fn name(&self) -> &str {
        "remote-sql"
    }

    fn generate(&self, request: &SqlRequest) -> Result<String, String> {
        let shape = match request.kind {
            StatementKind::Select => "SELECT <columns> FROM <table> WHERE <column> = <value> AND ...;",
            StatementKind::Update => "UPDATE <table> SET <column> = <value> WHERE <column> = <value> AND ...;",
        };
        let system = format!(
            "Translate the instruction into exactly one SQL statement of the form {shape} \
             Schema: {}. Reply with JSON {{\"sql\": \"...\"}}.",
            request.schema_hint
        );
        let schema = json!({
            "type": "object",
            "properties": {"sql": {"type": "string"}},
            "required": ["sql"],
            "additionalProperties": false
        });
        let doc = self
            .client
            .complete_json("sql", &system, &request.instruction, "sql", schema)
            .map_err(|e| e.to_string())?;
        doc.get("sql")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| RemoteError::SchemaValidationError("missing string field `sql`".into()).to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let v = json!({"choices": [{"message": {"content": "{\"sql\": \"SELECT a FROM b;\"}"}}]});
        assert_eq!(extract_content(&v).unwrap(), json!({"sql": "SELECT a FROM b;"}));
        let v = json!({"choices": [{"message": {"content": "not json"}}]});
        assert!(matches!(extract_content(&v), Err(RemoteError::SchemaValidationError(_))));
        assert!(extract_content(&json!({})).is_err());
        let v = json!({"choices": [{"message": {"content": "[1]"}}]});
        assert!(extract_content(&v).is_err());
    }

    #[test]
    fn token_never_printed() {
        let cfg = RemoteConfig::default();
        let c = RemoteClient::new(&cfg, "sekrit-123".into(), None).unwrap();
        assert!(!format!("{c:?}").contains("sekrit-123"));
        let v = c.redact(json!({"echo": "Bearer sekrit-123"}));
        assert_eq!(v, json!({"echo": "Bearer [REDACTED]"}));
    }
}
