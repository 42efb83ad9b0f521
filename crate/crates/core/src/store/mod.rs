//! In-process relational store for live link parameters, driven through a
//! small SQL subset (SELECT / UPDATE with conjunctive WHERE).

mod engine;
mod error;
mod link;
mod schema;
mod seed;
pub mod sql;
mod value;

pub use engine::{Database, ParamStore, QueryResult, Table};
pub use error::{Result, StoreError};
pub use link::{LinkRecord, LINK_COLUMNS};
pub use schema::{Check, Column, TableSchema};
pub use seed::{SeedConfig, AUDIT, LINKS, METRICS};
pub use sql::{parse_sql, Statement};
pub use value::{ColumnType, Value};
