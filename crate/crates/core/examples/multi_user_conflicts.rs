//! Opposing requests inside one window: the first one wins.

use std::sync::Arc;

use urcsc::orchestrator::{Clock, ManualClock, Orchestrator, Status};
use urcsc::store::SeedConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clock = Arc::new(ManualClock::new(0));
    let orch = Orchestrator::builder(Arc::new(SeedConfig::default_config().seed()?))
        .clock(clock.clone())
        .build()?;

    let outs = orch.handle_batch(
        &[
            ("alice", "Please improve the data transmission quality"),
            ("bob", "Please reduce the data transmission latency"),
            ("carol", "Please improve the data transmission quality"),
        ],
        clock.now_ms(),
    );
    for o in &outs {
        println!("{} #{}: {:?} {}", o.user_id, o.request_id, o.status, o.reason.as_deref().unwrap_or(""));
        if let Some(c) = &o.conflict {
            println!("  {}", serde_json::to_string(c)?);
        }
    }

    clock.advance(300);
    let late = orch.handle_request("bob", "Please reduce the data transmission latency");
    println!("bob after the window: {:?}", late.status);
    assert_eq!(late.status, Status::Applied);
    Ok(())
}
