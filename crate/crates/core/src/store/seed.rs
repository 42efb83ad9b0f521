use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::{Database, ParamStore};
use super::error::{Result, StoreError};
use super::schema::TableSchema;
use super::value::{ColumnType, Value};

pub const LINKS: &str = "links";
pub const METRICS: &str = "metrics";
pub const AUDIT: &str = "audit";

const DEFAULT_SEED: &str = include_str!("../../data/seed.json");

/// Declared tables and initial rows. Rows are JSON objects keyed by column
/// name; every column must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SeedConfig {
    #[serde(default)]
    pub tables: Vec<TableSchema>,
    #[serde(default)]
    pub rows: BTreeMap<String, Vec<serde_json::Map<String, serde_json::Value>>>,
    #[serde(default = "default_checks")]
    pub checks_enabled: bool,
}

fn default_checks() -> bool {
    true
}

impl SeedConfig {
    /// Tables `links`, `metrics` and `audit` with one link (tx 1 → rx 2,
    /// depth 7, 20 dB, AWGN).
    pub fn default_config() -> Self {
        serde_json::from_str(DEFAULT_SEED).expect("shipped seed parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StoreError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| StoreError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Overrides one column of every row of `table`.
    pub fn set_all(&mut self, table: &str, column: &str, value: serde_json::Value) -> &mut Self {
        if let Some(rows) = self.rows.get_mut(table) {
            for row in rows {
                row.insert(column.to_string(), value.clone());
            }
        }
        self
    }

    fn build(&self) -> Result<Database> {
        let mut db = Database::default();
        for t in &self.tables {
            db.create_table(t.clone())?;
        }
        let mut total = 0;
        for (table, rows) in &self.rows {
            let schema = db.table(table)?.schema.clone();
            for obj in rows {
                for key in obj.keys() {
                    schema.index_of(key)?;
                }
                let row = schema
                    .columns
                    .iter()
                    .map(|c| {
                        let v = obj
                            .iter()
                            .find(|(k, _)| k.eq_ignore_ascii_case(&c.name))
                            .map(|(_, v)| v)
                            .ok_or_else(|| {
                                StoreError::InvalidConfig(format!(
                                    "row in `{table}` lacks column `{}`",
                                    c.name
                                ))
                            })?;
                        json_to_value(v, c.ty, &c.name)
                    })
                    .collect::<Result<Vec<_>>>()?;
                db.insert(table, row, self.checks_enabled)?;
                total += 1;
            }
        }
        if let Ok(audit) = db.table(AUDIT) {
            let event_id = audit.rows.len() as i64 + 1;
            let detail = format!("tables={} rows={}", self.tables.len(), total);
            db.insert(
                AUDIT,
                vec![
                    Value::Integer(event_id),
                    Value::Text("seed".into()),
                    Value::Text(detail),
                ],
                false,
            )?;
        }
        Ok(db)
    }

    pub fn seed(&self) -> Result<ParamStore> {
        Ok(ParamStore::new(self.build()?, self.checks_enabled))
    }
}

fn json_to_value(v: &serde_json::Value, ty: ColumnType, column: &str) -> Result<Value> {
    let mismatch = || StoreError::TypeMismatch {
        column: column.to_string(),
        expected: ty,
        found: match v {
            serde_json::Value::String(_) => "TEXT",
            serde_json::Value::Number(_) => "REAL",
            _ => "JSON value",
        },
    };
    match (ty, v) {
        (ColumnType::Integer, serde_json::Value::Number(n)) => {
            n.as_i64().map(Value::Integer).ok_or_else(mismatch)
        }
        (ColumnType::Real, serde_json::Value::Number(n)) => {
            n.as_f64().map(Value::Real).ok_or_else(mismatch)
        }
        (ColumnType::Text, serde_json::Value::String(s)) => Ok(Value::Text(s.clone())),
        _ => Err(mismatch()),
    }
}
