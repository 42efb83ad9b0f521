use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use urcsc::gateway::{self, GatewayConfig};
use urcsc::orchestrator::{AuditLog, Orchestrator, RequestOutcome, Status};
use urcsc::store::SeedConfig;

const SCHEMA: &str = include_str!("../../../docs/schemas/wire.schema.json");

fn check(def: &str, instance: &Value) {
    let mut root: Value = serde_json::from_str(SCHEMA).unwrap();
    root["$ref"] = json!(format!("#/$defs/{def}"));
    let validator = jsonschema::validator_for(&root).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{def} rejected {instance}:\n{}", errors.join("\n"));
}

fn check_response(def: &str, resp: reqwest::blocking::Response, status: u16) {
    assert_eq!(resp.status().as_u16(), status);
    let ct = resp.headers()["content-type"].to_str().unwrap().to_string();
    assert!(ct.starts_with("application/json"), "{ct}");
    check(def, &resp.json().unwrap());
}

#[test]
fn gateway_bodies_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GatewayConfig {
        listen: "127.0.0.1:0".into(),
        audit_log: Some(dir.path().join("audit.jsonl")),
        ..Default::default()
    };
    let mut gw = gateway::spawn(cfg).unwrap();
    gw.wait_ready(Duration::from_secs(10)).unwrap();
    let u = gw.url();
    let c = reqwest::blocking::Client::new();

    check_response("Health", c.get(format!("{u}/healthz")).send().unwrap(), 200);
    check("Health", &json!({"status": "starting"}));
    for text in [
        "Please improve the data transmission quality",
        "Please reduce the latency",
        "Please increase the transmit power",
        "Please encrypt my traffic",
        "Is it going to rain?",
    ] {
        let resp = c
            .post(format!("{u}/api/v1/requests"))
            .json(&json!({"user_id": "u", "text": text}))
            .send()
            .unwrap();
        check_response("RequestOutcome", resp, 200);
    }
    check_response("LinkList", c.get(format!("{u}/api/v1/links")).send().unwrap(), 200);
    check_response("LinkView", c.get(format!("{u}/api/v1/links/1")).send().unwrap(), 200);
    check_response("MetricsHistory", c.get(format!("{u}/api/v1/metrics/history")).send().unwrap(), 200);
    check_response("MetricsHistory", c.get(format!("{u}/api/v1/metrics/history?link_id=1")).send().unwrap(), 200);
    check_response("EventBatch", c.get(format!("{u}/api/v1/events?since=0")).send().unwrap(), 200);
    check_response("EventBatch", c.get(format!("{u}/api/v1/events?since=5&timeout_ms=10")).send().unwrap(), 200);

    check_response("Error", c.get(format!("{u}/api/v1/links/7")).send().unwrap(), 404);
    check_response("Error", c.get(format!("{u}/api/v1/links/x")).send().unwrap(), 400);
    check_response("Error", c.get(format!("{u}/api/v1/events?timeout_ms=soon")).send().unwrap(), 400);
    check_response("Error", c.delete(format!("{u}/api/v1/links")).send().unwrap(), 405);
    check_response("Error", c.get(format!("{u}/missing")).send().unwrap(), 404);
    let bad = |body: &str| {
        c.post(format!("{u}/api/v1/requests"))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap()
    };
    check_response("Error", bad("]"), 400);
    check_response("Error", bad(r#"{"user_id": 3, "text": "x"}"#), 422);
    check_response("Error", bad(""), 400);
    drop(gw);

    let audit = std::fs::read_to_string(dir.path().join("audit.jsonl")).unwrap();
    assert_eq!(audit.lines().count(), 5);
    for line in audit.lines() {
        check("AuditLine", &serde_json::from_str(line).unwrap());
    }
}

#[test]
fn every_status_matches_schema() {
    let audit = Arc::new(AuditLog::new());
    let orch = Orchestrator::builder(Arc::new(SeedConfig::default_config().seed().unwrap()))
        .audit(audit.clone())
        .build()
        .unwrap();
    let mut seen = Vec::new();
    let mut record = |o: RequestOutcome| {
        seen.push(o.status);
        check("RequestOutcome", &serde_json::to_value(&o).unwrap());
    };
    for o in orch.handle_batch(&[("a", "Please improve the quality"), ("b", "Please reduce the quality")], 0) {
        record(o);
    }
    for i in 0..6 {
        record(orch.handle_request_at("a", "Please improve the quality", 1000 * (i + 1)));
    }
    record(orch.handle_request_at("a", "Please encrypt my traffic", 9000));
    record(orch.handle_request_at("a", "hello", 9000));
    for s in [Status::Applied, Status::Saturated, Status::Rejected, Status::Conflicted, Status::Unrecognized] {
        assert!(seen.contains(&s), "{s:?} not exercised");
    }
    for entry in audit.entries() {
        check("AuditLine", &serde_json::to_value(&entry).unwrap());
    }
    check(
        "AuditLine",
        &json!({"remote_exchange": {"backend": "intent", "url": "http://h/v1/chat/completions",
            "request": {}, "response": null, "error": "timed out after 5000 ms", "elapsed_ms": 5000}}),
    );
}

#[test]
fn files_match_schema() {
    check("GatewayConfig", &serde_json::to_value(GatewayConfig::default()).unwrap());
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    check(
        "GatewayConfig",
        &serde_json::from_str(&std::fs::read_to_string(format!("{data}/abstract.config.json")).unwrap()).unwrap(),
    );
    for name in ["quality_up", "latency_down", "abstract_quality", "abstract_latency"] {
        let path = format!("{data}/scenarios/{name}.jsonl");
        for line in std::fs::read_to_string(&path).unwrap().lines().filter(|l| !l.trim().is_empty()) {
            check("ScenarioLine", &serde_json::from_str(line).unwrap());
        }
    }
    check("SubmitRequest", &json!({"user_id": "u1", "text": "Please improve the data transmission quality"}));
}
