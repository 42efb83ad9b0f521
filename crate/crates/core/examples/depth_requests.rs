//! Quality and latency requests walking the encoding depth up and down.

use urcsc::orchestrator::Orchestrator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let orch = Orchestrator::with_defaults()?;
    let requests = std::iter::repeat_n("Please improve the data transmission quality", 6)
        .chain(std::iter::repeat_n("Please reduce the data transmission latency", 11));
    println!("{:>3}  {:<10}  {:>5}  {:>8}  {:>10}", "#", "status", "depth", "accuracy", "latency_ms");
    for (i, text) in requests.enumerate() {
        let out = orch.handle_request_at("alice", text, i as u64 * 1000);
        let m = out.after.expect("seeded link");
        println!(
            "{:>3}  {:<10}  {:>5}  {:>8.4}  {:>10.4}",
            i + 1,
            format!("{:?}", out.status),
            m.depth,
            m.accuracy,
            m.latency_ms
        );
    }
    Ok(())
}
