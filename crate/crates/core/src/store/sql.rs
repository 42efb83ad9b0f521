//! Parser, canonical printer and schema validation for the SQL subset.
//!
//! ```text
//! stmt    := select | update
//! select  := SELECT ident {"," ident} FROM ident [where] ";"
//! update  := UPDATE ident SET assign {"," assign} [where] ";"
//! assign  := ident "=" (literal | ident ("+" | "-") literal)
//! where   := WHERE cmp {AND cmp}
//! cmp     := ident ("=" | "<" | ">" | "<=" | ">=" | "<>") literal
//! literal := ["-"] number | 'text'
//! ```
//!
//! Keywords are case-insensitive and identifiers are folded to lower case.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::error::{Result, StoreError};
use super::schema::TableSchema;
use super::value::{ColumnType, Value};

const KEYWORDS: [&str; 6] = ["select", "from", "where", "and", "update", "set"];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "<>",
        }
    }

    pub(crate) fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Le => ord != Greater,
            CmpOp::Ge => ord != Less,
            CmpOp::Ne => ord != Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub column: String,
    pub op: CmpOp,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Literal(Value),
    /// `column + amount` or `column - amount`.
    Offset {
        column: String,
        op: ArithOp,
        amount: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub column: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Select {
    pub table: String,
    pub columns: Vec<String>,
    pub predicate: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub table: String,
    pub assignments: Vec<Assignment>,
    pub predicate: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Statement {
    Select(Select),
    Update(Update),
}

impl Statement {
    pub fn table(&self) -> &str {
        match self {
            Statement::Select(s) => &s.table,
            Statement::Update(u) => &u.table,
        }
    }

    pub fn is_update(&self) -> bool {
        matches!(self, Statement::Update(_))
    }

    /// Checks table/column existence, literal types and primary-key writes.
    pub fn validate(&self, schema: &TableSchema) -> Result<()> {
        let col_type = |name: &str| -> Result<ColumnType> {
            Ok(schema.columns[schema.index_of(name)?].ty)
        };
        let expect = |column: &str, ty: ColumnType, v: &Value| -> Result<()> {
            if v.fits(ty) {
                Ok(())
            } else {
                Err(StoreError::TypeMismatch {
                    column: column.to_string(),
                    expected: ty,
                    found: v.type_name(),
                })
            }
        };
        let predicate = match self {
            Statement::Select(s) => {
                for c in &s.columns {
                    col_type(c)?;
                }
                &s.predicate
            }
            Statement::Update(u) => {
                for a in &u.assignments {
                    let ty = col_type(&a.column)?;
                    if a.column.eq_ignore_ascii_case(&schema.primary_key) {
                        return Err(StoreError::PrimaryKeyAssignment(a.column.clone()));
                    }
                    match &a.expr {
                        Expr::Literal(v) => expect(&a.column, ty, v)?,
                        Expr::Offset { column, amount, .. } => {
                            let src = col_type(column)?;
                            // the source column's value flows into the target
                            let src_value = match src {
                                ColumnType::Integer => Value::Integer(0),
                                ColumnType::Real => Value::Real(0.0),
                                ColumnType::Text => Value::Text(String::new()),
                            };
                            expect(&a.column, ty, &src_value)?;
                            if !ty.is_numeric() {
                                return Err(StoreError::TypeMismatch {
                                    column: a.column.clone(),
                                    expected: ty,
                                    found: "arithmetic expression",
                                });
                            }
                            expect(&a.column, ty, amount)?;
                            expect(column, src, amount)?;
                        }
                    }
                }
                &u.predicate
            }
        };
        for cmp in predicate {
            let ty = col_type(&cmp.column)?;
            expect(&cmp.column, ty, &cmp.value)?;
        }
        Ok(())
    }
}

fn write_predicate(f: &mut fmt::Formatter<'_>, predicate: &[Comparison]) -> fmt::Result {
    for (i, c) in predicate.iter().enumerate() {
        f.write_str(if i == 0 { " WHERE " } else { " AND " })?;
        write!(f, "{} {} {}", c.column, c.op.as_str(), c.value)?;
    }
    Ok(())
}

/// Canonical form: upper-case keywords, single spaces, `", "` separators and
/// a trailing `;`.
impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(s) => {
                write!(f, "SELECT {} FROM {}", s.columns.join(", "), s.table)?;
                write_predicate(f, &s.predicate)?;
            }
            Statement::Update(u) => {
                write!(f, "UPDATE {} SET ", u.table)?;
                for (i, a) in u.assignments.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match &a.expr {
                        Expr::Literal(v) => write!(f, "{} = {}", a.column, v)?,
                        Expr::Offset { column, op, amount } => {
                            let sym = if *op == ArithOp::Add { '+' } else { '-' };
                            write!(f, "{} = {} {} {}", a.column, column, sym, amount)?
                        }
                    }
                }
                write_predicate(f, &u.predicate)?;
            }
        }
        f.write_str(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Comma,
    Semi,
    Plus,
    Minus,
    Op(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Op(op) => format!("`{}`", op.as_str()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |offset: usize, expected: &str, found: String| StoreError::Syntax {
        offset,
        expected: expected.to_string(),
        found,
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b',' => out.push((start, Tok::Comma)),
            b';' => out.push((start, Tok::Semi)),
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'=' => out.push((start, Tok::Op(CmpOp::Eq))),
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 1;
                    out.push((start, Tok::Op(CmpOp::Le)))
                }
                Some(b'>') => {
                    i += 1;
                    out.push((start, Tok::Op(CmpOp::Ne)))
                }
                _ => out.push((start, Tok::Op(CmpOp::Lt))),
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    out.push((start, Tok::Op(CmpOp::Ge)))
                } else {
                    out.push((start, Tok::Op(CmpOp::Gt)))
                }
            }
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match text[i..].chars().next() {
                        None => {
                            return Err(syntax(start, "closing `'`", "end of input".into()))
                        }
                        Some('\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => break,
                        Some(ch) => {
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if bytes.get(i) == Some(&b'.') {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(bytes.get(i), Some(b'e' | b'E')) {
                    let mut j = i + 1;
                    if matches!(bytes.get(j), Some(b'+' | b'-')) {
                        j += 1;
                    }
                    if bytes.get(j).is_some_and(u8::is_ascii_digit) {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                if !lit.bytes().any(|b| b.is_ascii_digit()) {
                    return Err(syntax(start, "number", format!("`{lit}`")));
                }
                out.push((start, Tok::Number(lit.to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(start, "a token", format!("`{ch}`")));
            }
        }
        i += 1;
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(StoreError::Syntax {
            offset: self.offset(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("keyword {}", kw.to_ascii_uppercase()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.to_ascii_lowercase();
                self.bump();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn number(&mut self, negative: bool) -> Result<Value> {
        let offset = self.offset();
        let Tok::Number(text) = self.peek().clone() else {
            return self.error("number");
        };
        self.bump();
        let signed = if negative { format!("-{text}") } else { text };
        let bad = || StoreError::Syntax {
            offset,
            expected: "representable number".into(),
            found: signed.clone(),
        };
        if signed.contains(['.', 'e', 'E']) {
            signed.parse::<f64>().ok().filter(|r| r.is_finite()).map(Value::Real).ok_or_else(bad)
        } else {
            signed.parse::<i64>().map(Value::Integer).map_err(|_| bad())
        }
    }

    fn literal(&mut self) -> Result<Value> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Text(s))
            }
            Tok::Minus => {
                self.bump();
                self.number(true)
            }
            Tok::Number(_) => self.number(false),
            _ => self.error("literal"),
        }
    }

    fn predicate(&mut self) -> Result<Vec<Comparison>> {
        let mut out = Vec::new();
        if !self.at_keyword("where") {
            return Ok(out);
        }
        self.bump();
        loop {
            let column = self.ident()?;
            let op = match self.peek() {
                Tok::Op(op) => *op,
                _ => return self.error("comparison operator"),
            };
            self.bump();
            let value = self.literal()?;
            out.push(Comparison { column, op, value });
            if !self.at_keyword("and") {
                return Ok(out);
            }
            self.bump();
        }
    }

    fn select(&mut self) -> Result<Statement> {
        self.keyword("select")?;
        let mut columns = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            columns.push(self.ident()?);
        }
        self.keyword("from")?;
        let table = self.ident()?;
        let predicate = self.predicate()?;
        Ok(Statement::Select(Select {
            table,
            columns,
            predicate,
        }))
    }

    fn assignment(&mut self) -> Result<Assignment> {
        let column = self.ident()?;
        if *self.peek() != Tok::Op(CmpOp::Eq) {
            return self.error("`=`");
        }
        self.bump();
        let expr = match self.peek() {
            Tok::Ident(_) => {
                let source = self.ident()?;
                let op = match self.bump() {
                    Tok::Plus => ArithOp::Add,
                    Tok::Minus => ArithOp::Sub,
                    _ => {
                        self.pos -= 1;
                        return self.error("`+` or `-`");
                    }
                };
                let amount = self.literal()?;
                if matches!(amount, Value::Text(_)) {
                    return Err(StoreError::TypeMismatch {
                        column,
                        expected: ColumnType::Real,
                        found: "TEXT",
                    });
                }
                Expr::Offset {
                    column: source,
                    op,
                    amount,
                }
            }
            _ => Expr::Literal(self.literal()?),
        };
        Ok(Assignment { column, expr })
    }

    fn update(&mut self) -> Result<Statement> {
        self.keyword("update")?;
        let table = self.ident()?;
        self.keyword("set")?;
        let mut assignments = vec![self.assignment()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            assignments.push(self.assignment()?);
        }
        let predicate = self.predicate()?;
        Ok(Statement::Update(Update {
            table,
            assignments,
            predicate,
        }))
    }
}

/// Parses exactly one `;`-terminated statement. Schema checks are separate
/// (see [`Statement::validate`]).
pub fn parse_sql(text: &str) -> Result<Statement> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let stmt = if p.at_keyword("select") {
        p.select()?
    } else if p.at_keyword("update") {
        p.update()?
    } else {
        return p.error("keyword SELECT or UPDATE");
    };
    if *p.peek() != Tok::Semi {
        return p.error("`;`");
    }
    p.bump();
    if *p.peek() != Tok::Eof {
        return p.error("end of input");
    }
    Ok(stmt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_with_two_predicates() {
        let s = parse_sql("SELECT encoding_depth FROM links WHERE tx_id = 1 AND rx_id = 2;").unwrap();
        let Statement::Select(sel) = &s else { panic!() };
        assert_eq!(sel.table, "links");
        assert_eq!(sel.columns, vec!["encoding_depth"]);
        assert_eq!(sel.predicate.len(), 2);
        assert_eq!(sel.predicate[1].value, Value::Integer(2));
    }

    #[test]
    fn relative_update() {
        let s = parse_sql("UPDATE links SET encoding_depth = encoding_depth + 1 WHERE link_id = 1;")
            .unwrap();
        let Statement::Update(u) = &s else { panic!() };
        assert_eq!(
            u.assignments[0].expr,
            Expr::Offset {
                column: "encoding_depth".into(),
                op: ArithOp::Add,
                amount: Value::Integer(1)
            }
        );
    }

    #[test]
    fn misspelled_keyword_reports_offset_zero() {
        match parse_sql("SELEC x FRM y;") {
            Err(StoreError::Syntax {
                offset, expected, ..
            }) => {
                assert_eq!(offset, 0);
                assert!(expected.contains("SELECT") && expected.contains("UPDATE"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keywords_case_insensitive_identifiers_folded() {
        let a = parse_sql("select Encoding_Depth from LINKS where TX_ID=1;").unwrap();
        let b = parse_sql("SELECT encoding_depth FROM links WHERE tx_id = 1;").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "SELECT encoding_depth FROM links WHERE tx_id = 1;");
    }

    #[test]
    fn missing_semicolon_and_trailing_garbage() {
        assert!(matches!(
            parse_sql("SELECT a FROM t"),
            Err(StoreError::Syntax { offset: 15, .. })
        ));
        assert!(parse_sql("SELECT a FROM t; SELECT b FROM t;").is_err());
    }

    #[test]
    fn literals() {
        let s = parse_sql("UPDATE t SET a = -3, b = 0.5, c = 'AWGN', d = 1e-3, e = x - -2;").unwrap();
        assert_eq!(
            s.to_string(),
            "UPDATE t SET a = -3, b = 0.5, c = 'AWGN', d = 0.001, e = x - -2;"
        );
        assert_eq!(parse_sql(&s.to_string()).unwrap(), s);
        assert!(parse_sql("UPDATE t SET a = 99999999999999999999;").is_err());
        assert!(parse_sql("SELECT a FROM t WHERE b = 'open;").is_err());
    }

    #[test]
    fn keyword_not_an_identifier() {
        assert!(parse_sql("SELECT from FROM t;").is_err());
    }
}
