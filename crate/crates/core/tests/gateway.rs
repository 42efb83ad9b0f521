mod common;

use std::time::Duration;

use serde_json::{json, Value};

use urcsc::gateway::{self, EventBatch, GatewayConfig, GatewayError, LinkView, RemoteConfig};
use urcsc::orchestrator::{RequestOutcome, Status};

fn start(cfg: GatewayConfig) -> gateway::RunningGateway {
    let mut gw = gateway::spawn(cfg).expect("spawn");
    gw.wait_ready(Duration::from_secs(10)).expect("ready");
    gw
}

fn local() -> GatewayConfig {
    GatewayConfig {
        listen: "127.0.0.1:0".into(),
        ..Default::default()
    }
}

fn http() -> reqwest::blocking::Client {
    reqwest::blocking::Client::new()
}

fn error_code(resp: reqwest::blocking::Response) -> (u16, String) {
    let status = resp.status().as_u16();
    let body: Value = resp.json().expect("json error body");
    (status, body["error"]["code"].as_str().expect("error.code").to_string())
}

#[test]
fn default_config_serves_seeded_link() {
    let gw = start(local());
    let health: Value = http().get(format!("{}/healthz", gw.url())).send().unwrap().json().unwrap();
    assert_eq!(health["status"], "ok");

    let links: Vec<LinkView> = http().get(format!("{}/api/v1/links", gw.url())).send().unwrap().json().unwrap();
    assert_eq!(links.len(), 1);
    assert_eq!(links[0].link.encoding_depth, 7);
    assert!((links[0].metrics.accuracy - 0.6899).abs() < 1e-12);

    let one: LinkView = http().get(format!("{}/api/v1/links/1", gw.url())).send().unwrap().json().unwrap();
    assert_eq!(one.link, links[0].link);
    assert_eq!((one.metrics.depth, one.metrics.accuracy), (7, links[0].metrics.accuracy));
}

#[test]
fn submit_then_poll_events() {
    let gw = start(local());
    let url = gw.url();
    let poller = std::thread::spawn({
        let url = url.clone();
        move || -> EventBatch {
            http()
                .get(format!("{url}/api/v1/events?since=0&timeout_ms=5000"))
                .send()
                .unwrap()
                .json()
                .unwrap()
        }
    });
    std::thread::sleep(Duration::from_millis(100));
    let out: RequestOutcome = http()
        .post(format!("{url}/api/v1/requests"))
        .json(&json!({"user_id": "u1", "text": "Please improve the data transmission quality"}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(out.status, Status::Applied);
    assert_eq!(out.after.as_ref().unwrap().depth, 8);

    let batch = poller.join().unwrap();
    assert_eq!(batch.events.len(), 1);
    assert_eq!(batch.last_seq, 1);
    assert_eq!(batch.events[0].outcome, out);

    let empty: EventBatch = http()
        .get(format!("{url}/api/v1/events?since=1&timeout_ms=50"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert!(empty.events.is_empty());
    assert_eq!(empty.last_seq, 1);

    let hist: Vec<Value> = http()
        .get(format!("{url}/api/v1/metrics/history?link_id=1"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(hist.len(), 2);
    assert_eq!(hist[1]["depth"], 8);
}

#[test]
fn malformed_input_gets_structured_errors() {
    let gw = start(local());
    let u = gw.url();
    let post = |body: &str| {
        http()
            .post(format!("{u}/api/v1/requests"))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap()
    };
    assert_eq!(error_code(post("{not json")), (400, "invalid_json".into()));
    assert_eq!(error_code(post(r#"{"user_id":"u"}"#)), (422, "invalid_field".into()));
    assert_eq!(error_code(post(r#"{"user_id":"u","text":"x","x":1}"#)), (422, "invalid_field".into()));
    assert_eq!(error_code(post(r#"{"user_id":" ","text":"x"}"#)), (422, "invalid_field".into()));

    let get = |path: &str| http().get(format!("{u}{path}")).send().unwrap();
    assert_eq!(error_code(get("/api/v1/links/abc")), (400, "invalid_parameter".into()));
    assert_eq!(error_code(get("/api/v1/links/99")), (404, "not_found".into()));
    assert_eq!(error_code(get("/api/v1/events?since=-1")), (400, "invalid_parameter".into()));
    assert_eq!(error_code(get("/nope")), (404, "not_found".into()));
    assert_eq!(error_code(get("/api/v1/requests")), (405, "method_not_allowed".into()));

    // Nothing above touched the store.
    let links: Vec<LinkView> = get("/api/v1/links").json().unwrap();
    assert_eq!(links[0].link.encoding_depth, 7);
}

#[test]
fn persistence_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GatewayConfig {
        persistence_log: Some(dir.path().join("store.log")),
        audit_log: Some(dir.path().join("audit.jsonl")),
        ..local()
    };
    let gw = start(cfg.clone());
    let resp = http()
        .post(format!("{}/api/v1/requests", gw.url()))
        .json(&json!({"user_id": "u1", "text": "Please improve the data transmission quality"}))
        .send()
        .unwrap();
    assert!(resp.status().is_success());
    gw.shutdown().unwrap();

    let gw = start(cfg);
    let links: Vec<LinkView> = http().get(format!("{}/api/v1/links", gw.url())).send().unwrap().json().unwrap();
    assert_eq!(links[0].link.encoding_depth, 8);
    assert_eq!(links[0].metrics.depth, 8);

    let audit = std::fs::read_to_string(dir.path().join("audit.jsonl")).unwrap();
    let first: Value = serde_json::from_str(audit.lines().next().unwrap()).unwrap();
    assert_eq!(first["status"], "Applied");
    assert_eq!(first["after"]["depth"], 8);
}

#[test]
fn missing_anchor_file_is_invalid_config() {
    let cfg = GatewayConfig {
        anchor_file: Some("/definitely/not/here/anchors.json".into()),
        ..local()
    };
    // Rejected either up front or during startup.
    let result = gateway::spawn(cfg).and_then(|mut gw| gw.wait_ready(Duration::from_secs(10)));
    match result {
        Err(GatewayError::InvalidConfig { field, reason }) => {
            assert_eq!(field, "anchor_file");
            assert!(reason.contains("/definitely/not/here/anchors.json"), "{reason}");
        }
        other => panic!("expected InvalidConfig, got {other:?}"),
    }
}

#[test]
fn remote_without_token_is_invalid_config() {
    let cfg = GatewayConfig {
        remote: RemoteConfig {
            enabled: true,
            base_url: "http://127.0.0.1:9/v1".into(),
            auth_env_var: "URCSC_TEST_TOKEN_UNSET_7a1c".into(),
            ..Default::default()
        },
        ..local()
    };
    match gateway::spawn(cfg) {
        Err(GatewayError::InvalidConfig { field, .. }) => assert!(field.starts_with("remote."), "{field}"),
        Err(e) => panic!("expected InvalidConfig, got {e}"),
        Ok(_) => panic!("expected InvalidConfig"),
    }
}

#[test]
fn bind_failure_is_reported() {
    let gw = start(local());
    let cfg = GatewayConfig {
        listen: gw.addr().to_string(),
        ..Default::default()
    };
    assert!(matches!(gateway::spawn(cfg), Err(GatewayError::BindFailure { .. })));
}

#[test]
fn remote_backend_through_gateway_keeps_token_private() {
    let mock = common::start();
    mock.set_intent(common::Reply::Content(common::good_intent()));
    let token = "secret-e51b-gateway";
    let var = "URCSC_TEST_TOKEN_SET_e51b";
    std::env::set_var(var, token);
    let dir = tempfile::tempdir().unwrap();
    let cfg = GatewayConfig {
        audit_log: Some(dir.path().join("audit.jsonl")),
        remote: RemoteConfig {
            enabled: true,
            base_url: mock.base_url(),
            auth_env_var: var.into(),
            timeout_ms: 2000,
            ..Default::default()
        },
        ..local()
    };
    let gw = start(cfg);
    let body = http()
        .post(format!("{}/api/v1/requests", gw.url()))
        .json(&json!({"user_id": "u1", "text": "make it prettier"}))
        .send()
        .unwrap()
        .text()
        .unwrap();
    let out: RequestOutcome = serde_json::from_str(&body).unwrap();
    assert_eq!(out.status, Status::Applied);
    assert!(!body.contains(token));
    drop(gw);
    let audit = std::fs::read_to_string(dir.path().join("audit.jsonl")).unwrap();
    assert!(audit.contains("remote_exchange"));
    assert!(!audit.contains(token));
}
