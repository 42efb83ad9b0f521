use serde::{Deserialize, Serialize};

use super::engine::QueryResult;
use super::error::{Result, StoreError};
use super::value::Value;

/// Column list used when a full link row is read back through SQL.
pub const LINK_COLUMNS: [&str; 10] = [
    "link_id",
    "tx_id",
    "rx_id",
    "encoding_depth",
    "snr_db",
    "channel",
    "bandwidth_hz",
    "channel_gain",
    "tx_power_w",
    "noise_psd",
];

/// One transmitter → receiver link as stored in the `links` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub link_id: i64,
    pub tx_id: i64,
    pub rx_id: i64,
    pub encoding_depth: i64,
    pub snr_db: f64,
    pub channel: String,
    pub bandwidth_hz: f64,
    pub channel_gain: f64,
    pub tx_power_w: f64,
    pub noise_psd: f64,
}

impl LinkRecord {
    /// `SELECT <all link columns> FROM links[ WHERE ...];` with the given
    /// canonical WHERE suffix (empty for all rows).
    pub fn select_sql(where_clause: &str) -> String {
        format!("SELECT {} FROM links{};", LINK_COLUMNS.join(", "), where_clause)
    }

    pub fn from_row(row: &[Value]) -> Result<Self> {
        let bad = |i: usize| StoreError::TypeMismatch {
            column: LINK_COLUMNS[i].to_string(),
            expected: super::value::ColumnType::Real,
            found: row.get(i).map_or("missing", Value::type_name),
        };
        let int = |i: usize| row.get(i).and_then(Value::as_i64).ok_or_else(|| bad(i));
        let real = |i: usize| row.get(i).and_then(Value::as_f64).ok_or_else(|| bad(i));
        Ok(LinkRecord {
            link_id: int(0)?,
            tx_id: int(1)?,
            rx_id: int(2)?,
            encoding_depth: int(3)?,
            snr_db: real(4)?,
            channel: row
                .get(5)
                .and_then(Value::as_str)
                .ok_or_else(|| bad(5))?
                .to_string(),
            bandwidth_hz: real(6)?,
            channel_gain: real(7)?,
            tx_power_w: real(8)?,
            noise_psd: real(9)?,
        })
    }

    /// Decodes every row of a result produced by [`LinkRecord::select_sql`].
    pub fn from_result(result: &QueryResult) -> Result<Vec<Self>> {
        result.rows().iter().map(|r| Self::from_row(r)).collect()
    }

    pub fn target(&self) -> (i64, i64) {
        (self.tx_id, self.rx_id)
    }
}
