use thiserror::Error;

use super::value::ColumnType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{column}` in table `{table}`")]
    UnknownColumn { table: String, column: String },
    #[error("type mismatch on column `{column}`: declared {expected}, got {found}")]
    TypeMismatch {
        column: String,
        expected: ColumnType,
        found: &'static str,
    },
    #[error("column `{0}` is the primary key and cannot be assigned")]
    PrimaryKeyAssignment(String),
    #[error("constraint violation on `{table}.{column}`: {detail}")]
    ConstraintViolation {
        table: String,
        column: String,
        detail: String,
    },
    #[error("duplicate key in `{table}`: {key}")]
    DuplicateKey { table: String, key: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("persistence log: {0}")]
    Log(String),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;
