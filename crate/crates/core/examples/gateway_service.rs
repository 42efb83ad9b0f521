//! Starts the HTTP gateway on an ephemeral port and drives it with plain
//! HTTP calls.

use std::time::Duration;

use serde_json::{json, Value};
use urcsc::gateway::{self, GatewayConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GatewayConfig {
        listen: "127.0.0.1:0".into(),
        ..Default::default()
    };
    let mut gw = gateway::spawn(cfg)?;
    gw.wait_ready(Duration::from_secs(5))?;
    let base = gw.url();
    let http = reqwest::blocking::Client::new();

    let health: Value = http.get(format!("{base}/healthz")).send()?.json()?;
    println!("healthz: {health}");

    let out: Value = http
        .post(format!("{base}/api/v1/requests"))
        .json(&json!({"user_id": "alice", "text": "Please improve the data transmission quality"}))
        .send()?
        .json()?;
    println!("status {} sql {}", out["status"], out["sql_issued"]);

    let links: Value = http.get(format!("{base}/api/v1/links")).send()?.json()?;
    println!("links: {links}");

    let events: Value = http
        .get(format!("{base}/api/v1/events?since=0&timeout_ms=100"))
        .send()?
        .json()?;
    println!("last_seq {}", events["last_seq"]);

    let bad = http.post(format!("{base}/api/v1/requests")).body("{not json").send()?;
    println!("malformed body -> {} {}", bad.status(), bad.text()?);

    gw.shutdown()?;
    Ok(())
}
