use serde::{Deserialize, Serialize};

use super::error::{Result, StoreError};
use super::value::{ColumnType, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: &str, ty: ColumnType) -> Self {
        Column {
            name: name.to_ascii_lowercase(),
            ty,
        }
    }
}

/// Inclusive numeric bounds enforced on every write to `column`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<Column>,
    pub primary_key: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    /// Additional column groups whose combined values must be unique.
    #[serde(default)]
    pub unique: Vec<Vec<String>>,
}

impl TableSchema {
    /// Normalizes identifiers to lower case and validates the declaration.
    pub fn validated(mut self) -> Result<Self> {
        let invalid = |msg: String| Err(StoreError::InvalidConfig(msg));
        self.name = self.name.to_ascii_lowercase();
        if !is_identifier(&self.name) {
            return invalid(format!("bad table name `{}`", self.name));
        }
        for c in &mut self.columns {
            c.name = c.name.to_ascii_lowercase();
            if !is_identifier(&c.name) {
                return invalid(format!("bad column name `{}`", c.name));
            }
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return invalid(format!("duplicate column `{}` in `{}`", c.name, self.name));
            }
        }
        self.primary_key = self.primary_key.to_ascii_lowercase();
        match self.column(&self.primary_key) {
            Some((_, c)) if c.ty != ColumnType::Real => {}
            Some(_) => {
                return invalid(format!(
                    "primary key `{}` of `{}` must be INTEGER or TEXT",
                    self.primary_key, self.name
                ))
            }
            None => {
                return invalid(format!(
                    "primary key `{}` is not a column of `{}`",
                    self.primary_key, self.name
                ))
            }
        }
        for check in &mut self.checks {
            check.column = check.column.to_ascii_lowercase();
            match self.columns.iter().find(|c| c.name == check.column) {
                Some(c) if c.ty.is_numeric() => {}
                _ => {
                    return invalid(format!(
                        "check on `{}` needs a numeric column of `{}`",
                        check.column, self.name
                    ))
                }
            }
            if let (Some(lo), Some(hi)) = (check.min, check.max) {
                if lo > hi {
                    return invalid(format!("check on `{}` has min > max", check.column));
                }
            }
        }
        for group in &mut self.unique {
            for col in group.iter_mut() {
                *col = col.to_ascii_lowercase();
                if self.columns.iter().all(|c| &c.name != col) {
                    return invalid(format!("unique group names unknown column `{col}`"));
                }
            }
        }
        Ok(self)
    }

    pub fn column(&self, name: &str) -> Option<(usize, &Column)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name.eq_ignore_ascii_case(name))
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.column(name)
            .map(|(i, _)| i)
            .ok_or_else(|| StoreError::UnknownColumn {
                table: self.name.clone(),
                column: name.to_string(),
            })
    }

    pub fn pk_index(&self) -> usize {
        self.column(&self.primary_key).map(|(i, _)| i).unwrap_or(0)
    }

    /// Verifies declared check constraints for one full row.
    pub fn check_row(&self, row: &[Value]) -> Result<()> {
        for check in &self.checks {
            let idx = self.index_of(&check.column)?;
            let Some(v) = row[idx].as_f64() else { continue };
            let below = check.min.is_some_and(|lo| v < lo);
            let above = check.max.is_some_and(|hi| v > hi);
            if below || above {
                return Err(StoreError::ConstraintViolation {
                    table: self.name.clone(),
                    column: check.column.clone(),
                    detail: format!(
                        "value {} outside [{}, {}]",
                        row[idx],
                        check.min.map_or("-inf".into(), |x| x.to_string()),
                        check.max.map_or("inf".into(), |x| x.to_string()),
                    ),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !super::sql::is_keyword(s)
}
