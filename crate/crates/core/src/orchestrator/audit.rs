use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, RequestOutcome, Status};
use crate::intent::Intent;
use crate::phy::MetricsSnapshot;

/// One line per handled request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub request_id: u64,
    pub user_id: String,
    pub intent: Option<Intent>,
    pub sql: Vec<String>,
    pub status: Status,
    pub before: Option<MetricsSnapshot>,
    pub after: Option<MetricsSnapshot>,
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl From<&RequestOutcome> for AuditRecord {
    fn from(o: &RequestOutcome) -> Self {
        AuditRecord {
            request_id: o.request_id,
            user_id: o.user_id.clone(),
            intent: o.intent.clone(),
            sql: o.sql_issued.clone(),
            status: o.status,
            before: o.before.clone(),
            after: o.after.clone(),
            t: o.t_ms,
            reason: o.reason.clone(),
            notes: o.notes.clone(),
        }
    }
}

/// A remote-model round trip with credentials removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteExchange {
    pub backend: String,
    pub url: String,
    pub request: serde_json::Value,
    pub response: Option<serde_json::Value>,
    pub error: Option<String>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AuditEntry {
    Request(AuditRecord),
    Remote { remote_exchange: RemoteExchange },
}

/// Append-only audit trail, kept in memory and optionally mirrored to a
/// JSONL file.
#[derive(Debug, Default)]
pub struct AuditLog {
    entries: Mutex<Vec<AuditEntry>>,
    file: Mutex<Option<(PathBuf, File)>>,
}

impl AuditLog {
    pub fn new() -> Self {
        AuditLog::default()
    }

    pub fn with_file(path: impl AsRef<Path>) -> Result<Self, OrchestratorError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| OrchestratorError::Io(format!("{}: {e}", path.display())))?;
        Ok(AuditLog {
            entries: Mutex::default(),
            file: Mutex::new(Some((path, file))),
        })
    }

    pub fn append(&self, entry: AuditEntry) {
        if let Some((path, file)) = self.file.lock().unwrap_or_else(|e| e.into_inner()).as_mut() {
            let line = serde_json::to_string(&entry).expect("audit entries serialize");
            if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                log::error!("audit log {}: {e}", path.display());
            }
        }
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).push(entry);
    }

    pub fn record_exchange(&self, exchange: RemoteExchange) {
        self.append(AuditEntry::Remote {
            remote_exchange: exchange,
        });
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        only_requests(self.entries())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<AuditEntry>, OrchestratorError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| OrchestratorError::Io(format!("{}: {e}", path.display()));
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut out = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| {
                OrchestratorError::Io(format!("{} line {}: {e}", path.display(), n + 1))
            })?);
        }
        Ok(out)
    }
}

pub fn only_requests(entries: Vec<AuditEntry>) -> Vec<AuditRecord> {
    entries
        .into_iter()
        .filter_map(|e| match e {
            AuditEntry::Request(r) => Some(r),
            AuditEntry::Remote { .. } => None,
        })
        .collect()
}
