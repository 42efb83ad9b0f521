use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, RequestOutcome};
use crate::store::LinkRecord;

/// One timed request in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioLine {
    pub t_ms: u64,
    pub user_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub outcomes: Vec<RequestOutcome>,
    pub links: Vec<LinkRecord>,
    pub fingerprint: String,
}

/// JSONL, one object per non-blank line. Timestamps must not decrease.
pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioLine>, OrchestratorError> {
    let mut out: Vec<ScenarioLine> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| OrchestratorError::MalformedScenario { line: n + 1, reason };
        let entry: ScenarioLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = out.last() {
            if entry.t_ms < prev.t_ms {
                return Err(bad(format!("t_ms {} is before {}", entry.t_ms, prev.t_ms)));
            }
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Vec<ScenarioLine>, OrchestratorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| OrchestratorError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
