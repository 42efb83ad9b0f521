use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::Serialize;

use super::error::{Result, StoreError};
use super::schema::TableSchema;
use super::sql::{parse_sql, ArithOp, Comparison, Expr, Statement};
use super::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema: TableSchema,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn matches(&self, row: &[Value], predicate: &[Comparison]) -> Result<bool> {
        for cmp in predicate {
            let idx = self.schema.index_of(&cmp.column)?;
            let ok = row[idx]
                .compare(&cmp.value)
                .is_some_and(|ord| cmp.op.holds(ord));
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn key_string(&self, row: &[Value], cols: &[usize]) -> String {
        cols.iter()
            .map(|&i| format!("{}={}", self.schema.columns[i].name, row[i]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Primary-key and unique-group constraints across the whole table.
    fn check_keys(&self, rows: &[Vec<Value>]) -> Result<()> {
        let mut groups = vec![vec![self.schema.pk_index()]];
        for g in &self.schema.unique {
            groups.push(g.iter().map(|c| self.schema.index_of(c)).collect::<Result<_>>()?);
        }
        for cols in groups {
            let mut seen = std::collections::HashSet::new();
            for row in rows {
                let key = self.key_string(row, &cols);
                if !seen.insert(key.clone()) {
                    return Err(StoreError::DuplicateKey {
                        table: self.schema.name.clone(),
                        key,
                    });
                }
            }
        }
        Ok(())
    }

    fn fingerprint_into(&self, out: &mut String) {
        let _ = writeln!(out, "table {}", self.schema.name);
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "  ({})", cells.join(", "));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    Affected(usize),
}

impl QueryResult {
    pub fn rows(&self) -> &[Vec<Value>] {
        match self {
            QueryResult::Rows { rows, .. } => rows,
            QueryResult::Affected(_) => &[],
        }
    }

    pub fn affected(&self) -> usize {
        match self {
            QueryResult::Rows { .. } => 0,
            QueryResult::Affected(n) => *n,
        }
    }

    /// First cell of the first row, if any.
    pub fn scalar(&self) -> Option<&Value> {
        self.rows().first().and_then(|r| r.first())
    }
}

/// The in-memory tables. Cloning gives an independent snapshot.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Database {
    tables: BTreeMap<String, Table>,
}

impl Database {
    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| StoreError::UnknownTable(name.to_string()))
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub(crate) fn create_table(&mut self, schema: TableSchema) -> Result<()> {
        let schema = schema.validated()?;
        if self.tables.contains_key(&schema.name) {
            return Err(StoreError::InvalidConfig(format!(
                "table `{}` declared twice",
                schema.name
            )));
        }
        self.tables.insert(
            schema.name.clone(),
            Table {
                schema,
                rows: Vec::new(),
            },
        );
        Ok(())
    }

    pub(crate) fn insert(&mut self, table: &str, row: Vec<Value>, checks: bool) -> Result<()> {
        let t = self
            .tables
            .get_mut(&table.to_ascii_lowercase())
            .ok_or_else(|| StoreError::UnknownTable(table.to_string()))?;
        if row.len() != t.schema.columns.len() {
            return Err(StoreError::InvalidConfig(format!(
                "row for `{table}` has {} values, expected {}",
                row.len(),
                t.schema.columns.len()
            )));
        }
        let row: Vec<Value> = row
            .into_iter()
            .zip(&t.schema.columns)
            .map(|(v, c)| {
                if v.fits(c.ty) {
                    Ok(v.coerce(c.ty))
                } else {
                    Err(StoreError::TypeMismatch {
                        column: c.name.clone(),
                        expected: c.ty,
                        found: v.type_name(),
                    })
                }
            })
            .collect::<Result<_>>()?;
        if checks {
            t.schema.check_row(&row)?;
        }
        let mut rows = t.rows.clone();
        rows.push(row);
        t.check_keys(&rows)?;
        t.rows = rows;
        Ok(())
    }

    pub fn query(&self, stmt: &Statement) -> Result<QueryResult> {
        let Statement::Select(sel) = stmt else {
            return Err(StoreError::InvalidConfig("query() takes a SELECT".into()));
        };
        let t = self.table(&sel.table)?;
        stmt.validate(&t.schema)?;
        let idx: Vec<usize> = sel
            .columns
            .iter()
            .map(|c| t.schema.index_of(c))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for row in &t.rows {
            if t.matches(row, &sel.predicate)? {
                rows.push(idx.iter().map(|&i| row[i].clone()).collect());
            }
        }
        Ok(QueryResult::Rows {
            columns: sel.columns.clone(),
            rows,
        })
    }

    /// Applies an UPDATE to every matching row, or to none if any resulting
    /// row would violate a constraint.
    pub(crate) fn apply(&mut self, stmt: &Statement, checks: bool) -> Result<usize> {
        let Statement::Update(upd) = stmt else {
            return Err(StoreError::InvalidConfig("apply() takes an UPDATE".into()));
        };
        let t = self
            .tables
            .get_mut(&upd.table.to_ascii_lowercase())
            .ok_or_else(|| StoreError::UnknownTable(upd.table.clone()))?;
        stmt.validate(&t.schema)?;
        let mut staged = t.rows.clone();
        let mut affected = 0;
        for row in staged.iter_mut() {
            if !t.matches(row, &upd.predicate)? {
                continue;
            }
            affected += 1;
            // all right-hand sides read the pre-update row
            let original = row.clone();
            for a in &upd.assignments {
                let target = t.schema.index_of(&a.column)?;
                let ty = t.schema.columns[target].ty;
                let value = match &a.expr {
                    Expr::Literal(v) => v.clone(),
                    Expr::Offset { column, op, amount } => {
                        let src = &original[t.schema.index_of(column)?];
                        offset(src, *op, amount, &a.column, &t.schema.name)?
                    }
                };
                row[target] = value.coerce(ty);
            }
            if checks {
                t.schema.check_row(row)?;
            }
        }
        t.check_keys(&staged)?;
        t.rows = staged;
        Ok(affected)
    }

    /// Text rendering of every table and row; equal fingerprints mean
    /// bit-identical contents.
    pub fn fingerprint(&self) -> String {
        let mut out = String::new();
        for t in self.tables.values() {
            t.fingerprint_into(&mut out);
        }
        out
    }
}

fn offset(src: &Value, op: ArithOp, amount: &Value, column: &str, table: &str) -> Result<Value> {
    let overflow = || StoreError::ConstraintViolation {
        table: table.to_string(),
        column: column.to_string(),
        detail: "integer overflow".into(),
    };
    Ok(match (src, amount) {
        (Value::Integer(a), Value::Integer(b)) => Value::Integer(match op {
            ArithOp::Add => a.checked_add(*b).ok_or_else(overflow)?,
            ArithOp::Sub => a.checked_sub(*b).ok_or_else(overflow)?,
        }),
        (a, b) => {
            let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            let r = if op == ArithOp::Add { a + b } else { a - b };
            if !r.is_finite() {
                return Err(overflow());
            }
            Value::Real(r)
        }
    })
}

struct PersistLog {
    path: PathBuf,
    file: File,
}

/// Thread-safe parameter store. Reads proceed concurrently; each UPDATE
/// takes the write lock and, if a persistence log is attached, is appended
/// to it in commit order.
pub struct ParamStore {
    db: RwLock<Database>,
    log: Mutex<Option<PersistLog>>,
    checks_enabled: bool,
}

impl std::fmt::Debug for ParamStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamStore")
            .field("checks_enabled", &self.checks_enabled)
            .finish_non_exhaustive()
    }
}

impl ParamStore {
    pub fn new(db: Database, checks_enabled: bool) -> Self {
        ParamStore {
            db: RwLock::new(db),
            log: Mutex::new(None),
            checks_enabled,
        }
    }

    pub fn checks_enabled(&self) -> bool {
        self.checks_enabled
    }

    /// Parses and validates `text` against the live schema.
    pub fn prepare(&self, text: &str) -> Result<Statement> {
        let stmt = parse_sql(text)?;
        let db = self.read();
        stmt.validate(&db.table(stmt.table())?.schema)?;
        Ok(stmt)
    }

    pub fn execute(&self, stmt: &Statement) -> Result<QueryResult> {
        match stmt {
            Statement::Select(_) => self.read().query(stmt),
            Statement::Update(_) => {
                let mut db = self.db.write().unwrap_or_else(|e| e.into_inner());
                let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
                let affected = db.apply(stmt, self.checks_enabled)?;
                if let Some(log) = log.as_mut() {
                    writeln!(log.file, "{stmt}")
                        .and_then(|_| log.file.flush())
                        .map_err(|e| StoreError::Log(format!("{}: {e}", log.path.display())))?;
                }
                Ok(QueryResult::Affected(affected))
            }
        }
    }

    /// Applies every UPDATE in `stmts` or none of them. SELECTs in the batch
    /// see the earlier updates.
    pub fn execute_all(&self, stmts: &[Statement]) -> Result<Vec<QueryResult>> {
        let mut db = self.db.write().unwrap_or_else(|e| e.into_inner());
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let mut staged = db.clone();
        let mut results = Vec::with_capacity(stmts.len());
        for stmt in stmts {
            results.push(match stmt {
                Statement::Select(_) => staged.query(stmt)?,
                Statement::Update(_) => QueryResult::Affected(staged.apply(stmt, self.checks_enabled)?),
            });
        }
        if let Some(log) = log.as_mut() {
            let mut text = String::new();
            for stmt in stmts.iter().filter(|s| matches!(s, Statement::Update(_))) {
                text.push_str(&format!("{stmt}\n"));
            }
            log.file
                .write_all(text.as_bytes())
                .and_then(|_| log.file.flush())
                .map_err(|e| StoreError::Log(format!("{}: {e}", log.path.display())))?;
        }
        *db = staged;
        Ok(results)
    }

    pub fn execute_sql(&self, text: &str) -> Result<QueryResult> {
        self.execute(&parse_sql(text)?)
    }

    /// Inserts a row directly; the SQL subset has no INSERT. Not logged.
    pub fn insert_row(&self, table: &str, row: Vec<Value>) -> Result<()> {
        let mut db = self.db.write().unwrap_or_else(|e| e.into_inner());
        db.insert(table, row, self.checks_enabled)
    }

    pub fn snapshot(&self) -> Database {
        self.read().clone()
    }

    pub fn fingerprint(&self) -> String {
        self.read().fingerprint()
    }

    pub fn read(&self) -> std::sync::RwLockReadGuard<'_, Database> {
        self.db.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Replays every statement already in `path`, then appends each
    /// subsequent successful UPDATE to it. Returns the number replayed.
    pub fn attach_log(&self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref().to_path_buf();
        let log_err = |e: std::io::Error| StoreError::Log(format!("{}: {e}", path.display()));
        let mut replayed = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(log_err)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(log_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let stmt = parse_sql(&line).map_err(|e| {
                    StoreError::Log(format!("{} line {}: {e}", path.display(), n + 1))
                })?;
                self.execute(&stmt)?;
                replayed += 1;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(log_err)?;
        *self.log.lock().unwrap_or_else(|e| e.into_inner()) = Some(PersistLog { path, file });
        Ok(replayed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::seed::SeedConfig;

    fn store() -> ParamStore {
        SeedConfig::default_config().seed().unwrap()
    }

    #[test]
    fn seeded_depth_read() {
        let s = store();
        let r = s
            .execute_sql("SELECT encoding_depth FROM links WHERE tx_id=1 AND rx_id=2;")
            .unwrap();
        assert_eq!(r.rows(), &[vec![Value::Integer(7)]]);
    }

    #[test]
    fn read_your_write() {
        let s = store();
        let r = s
            .execute_sql("UPDATE links SET encoding_depth = 8 WHERE link_id = 1;")
            .unwrap();
        assert_eq!(r.affected(), 1);
        let r = s
            .execute_sql("SELECT encoding_depth FROM links WHERE link_id = 1;")
            .unwrap();
        assert_eq!(r.scalar(), Some(&Value::Integer(8)));
    }

    #[test]
    fn check_violation_leaves_store_unchanged() {
        let s = store();
        let before = s.fingerprint();
        let err = s
            .execute_sql("UPDATE links SET encoding_depth = 99 WHERE link_id = 1;")
            .unwrap_err();
        assert!(matches!(err, StoreError::ConstraintViolation { .. }));
        assert_eq!(before, s.fingerprint());
        let err = s
            .execute_sql("UPDATE links SET encoding_depth = encoding_depth + 6 WHERE link_id = 1;")
            .unwrap_err();
        assert!(matches!(err, StoreError::ConstraintViolation { .. }));
        assert_eq!(before, s.fingerprint());
    }

    #[test]
    fn unknown_names_and_types() {
        let s = store();
        assert!(matches!(
            s.prepare("SELECT x FROM nope;"),
            Err(StoreError::UnknownTable(_))
        ));
        assert!(matches!(
            s.prepare("SELECT nope FROM links;"),
            Err(StoreError::UnknownColumn { .. })
        ));
        assert!(matches!(
            s.prepare("UPDATE links SET encoding_depth = 'deep';"),
            Err(StoreError::TypeMismatch { .. })
        ));
        assert!(matches!(
            s.prepare("UPDATE links SET encoding_depth = 7.5;"),
            Err(StoreError::TypeMismatch { .. })
        ));
        assert!(matches!(
            s.prepare("UPDATE links SET link_id = 3;"),
            Err(StoreError::PrimaryKeyAssignment(_))
        ));
        assert!(s.prepare("UPDATE links SET tx_power_w = 1;").is_ok());
    }

    #[test]
    fn unique_pair_enforced_on_update() {
        let s = store();
        s.insert_row(
            "links",
            vec![
                Value::Integer(2),
                Value::Integer(3),
                Value::Integer(4),
                Value::Integer(7),
                Value::Real(20.0),
                Value::Text("AWGN".into()),
                Value::Real(1e6),
                Value::Real(4e-12),
                Value::Real(0.1),
                Value::Real(4e-21),
            ],
        )
        .unwrap();
        let before = s.fingerprint();
        let err = s
            .execute_sql("UPDATE links SET tx_id = 1, rx_id = 2 WHERE link_id = 2;")
            .unwrap_err();
        assert!(matches!(err, StoreError::DuplicateKey { .. }));
        assert_eq!(before, s.fingerprint());
    }

    #[test]
    fn real_range_predicates() {
        let s = store();
        let r = s
            .execute_sql("SELECT link_id FROM links WHERE snr_db >= 19.5 AND snr_db < 20.5;")
            .unwrap();
        assert_eq!(r.rows().len(), 1);
        let r = s
            .execute_sql("SELECT link_id FROM links WHERE channel <> 'AWGN';")
            .unwrap();
        assert!(r.rows().is_empty());
    }

    #[test]
    fn persistence_log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.log");
        let a = store();
        assert_eq!(a.attach_log(&path).unwrap(), 0);
        a.execute_sql("update links set encoding_depth = encoding_depth - 2 where link_id = 1;")
            .unwrap();
        a.execute_sql("SELECT encoding_depth FROM links;").unwrap();
        a.execute_sql("UPDATE links SET tx_power_w = 0.25 WHERE tx_id = 1;").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "UPDATE links SET encoding_depth = encoding_depth - 2 WHERE link_id = 1;\n\
             UPDATE links SET tx_power_w = 0.25 WHERE tx_id = 1;\n"
        );
        let b = store();
        assert_eq!(b.attach_log(&path).unwrap(), 2);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
