//! Replays a shipped scenario and rebuilds the store from the audit trail.

use std::sync::Arc;

use urcsc::orchestrator::{load_scenario, rebuild_from_audit, Orchestrator};
use urcsc::phy::Surrogate;
use urcsc::store::SeedConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "quality_up".into());
    let path = format!("{}/data/scenarios/{name}.jsonl", env!("CARGO_MANIFEST_DIR"));
    let lines = load_scenario(&path)?;

    let orch = Orchestrator::with_defaults()?;
    let report = orch.replay(&lines)?;
    for o in &report.outcomes {
        let (b, a) = (o.before.as_ref().unwrap(), o.after.as_ref().unwrap());
        println!(
            "t={:>5}  {:?}  depth {} -> {}  accuracy {:.4} -> {:.4}  latency {:.4} -> {:.4} ms",
            o.t_ms, o.status, b.depth, a.depth, b.accuracy, a.accuracy, b.latency_ms, a.latency_ms
        );
    }

    let rebuilt = rebuild_from_audit(
        &SeedConfig::default_config(),
        Arc::new(Surrogate::shipped()),
        &orch.audit().records(),
    )?;
    println!("audit replay matches: {}", rebuilt.fingerprint() == report.fingerprint);
    Ok(())
}
