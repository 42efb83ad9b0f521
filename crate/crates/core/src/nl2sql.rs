//! Deterministic compiler from intents and controlled commands to the SQL
//! subset understood by [`crate::store`].
//!
//! Controlled grammar:
//!
//! ```text
//! [Please] (increase|decrease) the <parameter-phrase>
//!     between transmitter <int> and receiver <int>
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::{Direction, Intent, LinkTarget, SchemaLinkage};
use crate::optimizer::{DepthPlan, PowerPlan};
use crate::store::sql::{Assignment, CmpOp, Comparison, Expr, Select, Update};
use crate::store::{parse_sql, Statement, Value};

/// Parameter phrases accepted in controlled commands.
pub const PARAMETER_PHRASES: [(&str, &str); 3] = [
    ("encoding depth", "encoding_depth"),
    ("transmit power", "tx_power_w"),
    ("transmission power", "tx_power_w"),
];

/// Columns that address a row rather than carry a tunable value.
pub const ADDRESS_COLUMNS: [&str; 3] = ["link_id", "tx_id", "rx_id"];

const PRODUCTION: &str =
    "[Please] (increase|decrease) the <parameter-phrase> between transmitter <int> and receiver <int>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Nl2SqlError {
    #[error("grammar mismatch: {reason} (production: {production})")]
    GrammarMismatch { reason: String, production: String },
    #[error("parameter `{0}` is not linked to any table column")]
    UnlinkedParameter(String),
    #[error("remote SQL rejected: {0}")]
    RejectedRemoteSql(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlledCommand {
    pub verb: Direction,
    pub parameter: String,
    pub tx_id: i64,
    pub rx_id: i64,
}

impl ControlledCommand {
    pub fn from_intent(intent: &Intent) -> Self {
        ControlledCommand {
            verb: intent.direction,
            parameter: intent.parameter.clone(),
            tx_id: intent.target.tx_id,
            rx_id: intent.target.rx_id,
        }
    }

    pub fn target(&self) -> LinkTarget {
        LinkTarget::new(self.tx_id, self.rx_id)
    }
}

fn mismatch(reason: impl Into<String>) -> Nl2SqlError {
    Nl2SqlError::GrammarMismatch {
        reason: reason.into(),
        production: PRODUCTION.to_string(),
    }
}

pub fn parse_controlled(text: &str) -> Result<ControlledCommand, Nl2SqlError> {
    let words: Vec<String> = text
        .trim()
        .trim_end_matches(['.', '!'])
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut pos = 0;
    if words.first().map(String::as_str) == Some("please") {
        pos += 1;
    }
    let word = |i: usize| words.get(i).map_or("<end>", String::as_str);
    let verb = match word(pos) {
        "increase" => Direction::Increase,
        "decrease" => Direction::Decrease,
        w => return Err(mismatch(format!("expected `increase` or `decrease`, found `{w}`"))),
    };
    pos += 1;
    if word(pos) != "the" {
        return Err(mismatch(format!("expected `the`, found `{}`", word(pos))));
    }
    pos += 1;
    let Some(between) = words[pos..].iter().position(|w| w == "between") else {
        return Err(mismatch("expected `between transmitter <int> and receiver <int>`"));
    };
    let phrase = words[pos..pos + between].join(" ");
    let parameter = PARAMETER_PHRASES
        .iter()
        .find(|(p, _)| *p == phrase)
        .map(|(_, param)| param.to_string())
        .ok_or_else(|| {
            let known: Vec<_> = PARAMETER_PHRASES.iter().map(|(p, _)| *p).collect();
            mismatch(format!(
                "unknown parameter phrase `{phrase}`; expected one of: {}",
                known.join(", ")
            ))
        })?;
    pos += between + 1;
    let expect_id = |kw: &str, pos: &mut usize| -> Result<i64, Nl2SqlError> {
        if word(*pos) != kw {
            return Err(mismatch(format!("expected `{kw}`, found `{}`", word(*pos))));
        }
        let id = word(*pos + 1)
            .parse::<i64>()
            .map_err(|_| mismatch(format!("expected integer after `{kw}`, found `{}`", word(*pos + 1))))?;
        *pos += 2;
        Ok(id)
    };
    let tx_id = expect_id("transmitter", &mut pos)?;
    if word(pos) != "and" {
        return Err(mismatch(format!("expected `and`, found `{}`", word(pos))));
    }
    pos += 1;
    let rx_id = expect_id("receiver", &mut pos)?;
    if pos != words.len() {
        return Err(mismatch(format!("unexpected trailing `{}`", word(pos))));
    }
    Ok(ControlledCommand {
        verb,
        parameter,
        tx_id,
        rx_id,
    })
}

/// Canonical controlled sentence, as produced for the SQL stage.
pub fn print_controlled(cmd: &ControlledCommand) -> String {
    let phrase = PARAMETER_PHRASES
        .iter()
        .find(|(_, p)| *p == cmd.parameter)
        .map_or(cmd.parameter.as_str(), |(phrase, _)| phrase);
    format!(
        "Please {} the {} between transmitter {} and receiver {}",
        cmd.verb.verb(),
        phrase,
        cmd.tx_id,
        cmd.rx_id
    )
}

/// Anything naming a parameter on one link.
pub trait ParameterRequest {
    fn parameter(&self) -> &str;
    fn target(&self) -> LinkTarget;
}

impl ParameterRequest for Intent {
    fn parameter(&self) -> &str {
        &self.parameter
    }
    fn target(&self) -> LinkTarget {
        self.target
    }
}

impl ParameterRequest for ControlledCommand {
    fn parameter(&self) -> &str {
        &self.parameter
    }
    fn target(&self) -> LinkTarget {
        ControlledCommand::target(self)
    }
}

fn target_predicate(target: LinkTarget) -> Vec<Comparison> {
    vec![
        Comparison {
            column: "tx_id".into(),
            op: CmpOp::Eq,
            value: Value::Integer(target.tx_id),
        },
        Comparison {
            column: "rx_id".into(),
            op: CmpOp::Eq,
            value: Value::Integer(target.rx_id),
        },
    ]
}

pub fn to_select_statement(
    req: &impl ParameterRequest,
    linkage: &SchemaLinkage,
) -> Result<Statement, Nl2SqlError> {
    let (table, column) = linkage
        .resolve(req.parameter())
        .ok_or_else(|| Nl2SqlError::UnlinkedParameter(req.parameter().to_string()))?;
    Ok(Statement::Select(Select {
        table: table.to_string(),
        columns: vec![column.to_string()],
        predicate: target_predicate(req.target()),
    }))
}

/// `SELECT <column> FROM <table> WHERE tx_id = X AND rx_id = Y;`
pub fn to_select(req: &impl ParameterRequest, linkage: &SchemaLinkage) -> Result<String, Nl2SqlError> {
    Ok(to_select_statement(req, linkage)?.to_string())
}

/// A plan carrying an absolute new value for one parameter of one link.
#[derive(Debug, Clone, Copy)]
pub enum UpdatePlan<'a> {
    Depth(&'a DepthPlan),
    Power(&'a PowerPlan),
}

impl<'a> From<&'a DepthPlan> for UpdatePlan<'a> {
    fn from(p: &'a DepthPlan) -> Self {
        UpdatePlan::Depth(p)
    }
}

impl<'a> From<&'a PowerPlan> for UpdatePlan<'a> {
    fn from(p: &'a PowerPlan) -> Self {
        UpdatePlan::Power(p)
    }
}

pub fn to_update_statement<'a>(
    plan: impl Into<UpdatePlan<'a>>,
    linkage: &SchemaLinkage,
) -> Result<Statement, Nl2SqlError> {
    let (parameter, target, value) = match plan.into() {
        UpdatePlan::Depth(p) => ("encoding_depth", p.target, Value::Integer(p.new_depth)),
        UpdatePlan::Power(p) => ("tx_power_w", p.target, Value::Real(p.new_power_w)),
    };
    let (table, column) = linkage
        .resolve(parameter)
        .ok_or_else(|| Nl2SqlError::UnlinkedParameter(parameter.to_string()))?;
    Ok(Statement::Update(Update {
        table: table.to_string(),
        assignments: vec![Assignment {
            column: column.to_string(),
            expr: Expr::Literal(value),
        }],
        predicate: target_predicate(target),
    }))
}

/// `UPDATE <table> SET <column> = <absolute value> WHERE tx_id = X AND rx_id = Y;`
pub fn to_update<'a>(plan: impl Into<UpdatePlan<'a>>, linkage: &SchemaLinkage) -> Result<String, Nl2SqlError> {
    Ok(to_update_statement(plan, linkage)?.to_string())
}

/// Accepts SQL from a remote generator only if it parses, touches linked
/// tables and columns alone, and means the same thing as `expected` (the
/// deterministic emission): same table and value columns, and a predicate
/// pinning the same link. UPDATEs must match `expected` exactly so the
/// optimizer stays the single source of new values.
pub fn validate_remote_sql(
    text: &str,
    expected: &Statement,
    linkage: &SchemaLinkage,
) -> Result<Statement, Nl2SqlError> {
    let reject = |m: String| Nl2SqlError::RejectedRemoteSql(m);
    let stmt = parse_sql(text.trim()).map_err(|e| reject(e.to_string()))?;
    let linked = linkage.columns_of(stmt.table());
    if linked.is_empty() {
        return Err(reject(format!("table `{}` is not linked", stmt.table())));
    }
    let allowed = |c: &str| linked.contains(&c) || ADDRESS_COLUMNS.contains(&c);
    let (columns, predicate): (Vec<&str>, &[Comparison]) = match &stmt {
        Statement::Select(s) => (s.columns.iter().map(String::as_str).collect(), &s.predicate),
        Statement::Update(u) => (u.assignments.iter().map(|a| a.column.as_str()).collect(), &u.predicate),
    };
    if let Some(c) = columns
        .iter()
        .copied()
        .chain(predicate.iter().map(|c| c.column.as_str()))
        .find(|c| !allowed(c))
    {
        return Err(reject(format!("column `{c}` is not linked")));
    }
    match (&stmt, expected) {
        (Statement::Select(got), Statement::Select(want)) => {
            if got.table != want.table || got.columns != want.columns {
                return Err(reject("selects a different table or columns".into()));
            }
            for pin in &want.predicate {
                if !got.predicate.iter().any(|c| c == pin) {
                    return Err(reject(format!("predicate lacks `{} = {}`", pin.column, pin.value)));
                }
            }
            Ok(stmt)
        }
        (Statement::Update(_), Statement::Update(_)) if &stmt == expected => Ok(stmt),
        (Statement::Update(_), Statement::Update(_)) => {
            Err(reject("update differs from the planned change".into()))
        }
        _ => Err(reject("wrong statement kind".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatementKind {
    Select,
    Update,
}

/// What a SQL generator is asked to translate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlRequest {
    pub kind: StatementKind,
    /// Controlled sentence for SELECTs, or a "set ... to ..." sentence for
    /// UPDATEs.
    pub instruction: String,
    /// `table(col, ...)` summary of the linked schema.
    pub schema_hint: String,
}

impl SqlRequest {
    pub fn select(cmd: &ControlledCommand, linkage: &SchemaLinkage) -> Self {
        SqlRequest {
            kind: StatementKind::Select,
            instruction: print_controlled(cmd),
            schema_hint: schema_hint(linkage),
        }
    }

    pub fn update(expected: &Statement, linkage: &SchemaLinkage) -> Self {
        let instruction = match expected {
            Statement::Update(u) => {
                let sets: Vec<String> = u
                    .assignments
                    .iter()
                    .map(|a| match &a.expr {
                        Expr::Literal(v) => format!("{} to {}", a.column, v),
                        Expr::Offset { .. } => a.column.clone(),
                    })
                    .collect();
                let wheres: Vec<String> =
                    u.predicate.iter().map(|c| format!("{} {} {}", c.column, c.op.as_str(), c.value)).collect();
                format!("Set {} in {} where {}", sets.join(" and "), u.table, wheres.join(" and "))
            }
            Statement::Select(_) => expected.to_string(),
        };
        SqlRequest {
            kind: StatementKind::Update,
            instruction,
            schema_hint: schema_hint(linkage),
        }
    }
}

fn schema_hint(linkage: &SchemaLinkage) -> String {
    let mut tables: Vec<&str> = linkage.entries.values().flatten().map(|e| e.table.as_str()).collect();
    tables.sort_unstable();
    tables.dedup();
    tables
        .iter()
        .map(|t| {
            let mut cols: Vec<&str> = ADDRESS_COLUMNS.to_vec();
            for c in linkage.columns_of(t) {
                if !cols.contains(&c) {
                    cols.push(c);
                }
            }
            format!("{t}({})", cols.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// A SQL generator standing in for the deterministic emitter. Its output is
/// always passed through [`validate_remote_sql`].
pub trait SqlBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, request: &SqlRequest) -> Result<String, String>;
}
