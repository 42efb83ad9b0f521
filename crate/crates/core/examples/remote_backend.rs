//! Remote intent and SQL backends against a local stand-in for a
//! chat-completions service, with fallback when a reply is unusable.

use std::sync::Arc;

use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use urcsc::gateway::{RemoteClient, RemoteConfig, RemoteIntentBackend, RemoteSqlBackend};
use urcsc::orchestrator::{AuditEntry, AuditLog, Orchestrator};
use urcsc::store::SeedConfig;

/// Answers intent prompts sensibly and SQL prompts with a statement that
/// targets the wrong link, so the SQL stage falls back.
async fn complete(Json(body): Json<Value>) -> Json<Value> {
    let name = body["response_format"]["json_schema"]["name"].as_str().unwrap_or("");
    let content = if name == "intent" {
        json!({"category": "QoS", "parameter": "encoding_depth", "direction": "Increase", "tx_id": 1, "rx_id": 2})
    } else {
        json!({"sql": "UPDATE links SET encoding_depth = 12 WHERE tx_id = 1 AND rx_id = 2;"})
    };
    Json(json!({"choices": [{"message": {"role": "assistant", "content": content.to_string()}}]}))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    rt.spawn(async move {
        let app = Router::new().route("/v1/chat/completions", post(complete));
        axum::serve(listener, app).await.ok();
    });

    let audit = Arc::new(AuditLog::new());
    let cfg = RemoteConfig {
        enabled: true,
        base_url: format!("http://{addr}/v1"),
        timeout_ms: 2000,
        ..Default::default()
    };
    let client = Arc::new(RemoteClient::new(&cfg, "example-token".into(), Some(audit.clone()))?);
    let orch = Orchestrator::builder(Arc::new(SeedConfig::default_config().seed()?))
        .remote_intent(Arc::new(RemoteIntentBackend::new(client.clone(), Default::default())))
        .remote_sql(Arc::new(RemoteSqlBackend::new(client)))
        .audit(audit.clone())
        .build()?;

    let out = orch.handle_request("alice", "make the pictures look nicer");
    println!("status: {:?}, depth now {}", out.status, out.after.unwrap().depth);
    for note in &out.notes {
        println!("note: {note}");
    }
    let exchanges = audit
        .entries()
        .into_iter()
        .filter(|e| matches!(e, AuditEntry::Remote { .. }))
        .count();
    println!("{exchanges} remote exchanges in the audit log");
    drop(orch);
    rt.shutdown_background();
    Ok(())
}
