//! The control loop: request text → intent → SQL read → plan → SQL write →
//! surrogate metrics, with one writer at a time and first-wins conflict
//! resolution inside a tumbling window.
//!
//! ```
//! use urcsc::orchestrator::{Orchestrator, Status};
//!
//! let orch = Orchestrator::with_defaults().unwrap();
//! let out = orch.handle_request_at("alice", "Please improve the data transmission quality", 0);
//! assert_eq!(out.status, Status::Applied);
//! assert_eq!(out.after.unwrap().depth, 8);
//! ```

mod audit;
mod conflict;
mod events;
mod scenario;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::{
    Intent, IntentBackend, IntentError, LinkTarget, RuleBasedAnalyzer, SchemaLinkage,
};
use crate::nl2sql::{
    print_controlled, to_select_statement, to_update_statement, validate_remote_sql,
    ControlledCommand, SqlBackend, SqlRequest,
};
use crate::optimizer::{
    classify_params, plan_depth_update, solve_ee, DepthBounds, DepthPlan, EeProblem, EeUser,
    PlanLimits, PowerPlan, ProblemSplit,
};
use crate::phy::{self, CodecBackend, MetricsSnapshot, PhyError, Surrogate};
use crate::store::sql::{Assignment, CmpOp, Comparison, Expr, Update};
use crate::store::{
    parse_sql, LinkRecord, ParamStore, QueryResult, SeedConfig, Statement, StoreError, Value,
    METRICS,
};

pub use audit::{only_requests, AuditEntry, AuditLog, AuditRecord, RemoteExchange};
pub use conflict::{
    detect_all_conflicts, detect_conflicts, ConflictReport, ConflictWindow, PendingRequest,
    Resolution,
};
pub use events::{Event, EventFeed};
pub use scenario::{load_scenario, parse_scenario, ReplayReport, ScenarioLine};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed scenario at line {line}: {reason}")]
    MalformedScenario { line: usize, reason: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Applied,
    /// Valid request already at a bound or optimum; nothing written.
    Saturated,
    Rejected,
    Conflicted,
    Unrecognized,
}

/// Energy-efficient reallocation across every link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReallocation {
    /// Links whose power changes.
    pub changes: Vec<PowerPlan>,
    pub energy_efficiency_before: f64,
    pub energy_efficiency_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plan {
    Depth(DepthPlan),
    Power(PowerReallocation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestOutcome {
    pub request_id: u64,
    pub user_id: String,
    pub text: String,
    pub t_ms: u64,
    pub intent: Option<Intent>,
    /// Canonical controlled sentence handed to the SQL stage.
    pub controlled: Option<String>,
    /// Every statement issued, in order.
    pub sql_issued: Vec<String>,
    pub split: Option<ProblemSplit>,
    pub plan: Option<Plan>,
    pub before: Option<MetricsSnapshot>,
    pub after: Option<MetricsSnapshot>,
    pub status: Status,
    pub reason: Option<String>,
    /// Backend fallbacks and similar annotations.
    pub notes: Vec<String>,
    pub conflict: Option<ConflictReport>,
}

impl RequestOutcome {
    fn new(request_id: u64, user_id: &str, text: &str, t_ms: u64, notes: Vec<String>) -> Self {
        RequestOutcome {
            request_id,
            user_id: user_id.to_string(),
            text: text.to_string(),
            t_ms,
            intent: None,
            controlled: None,
            sql_issued: Vec::new(),
            split: None,
            plan: None,
            before: None,
            after: None,
            status: Status::Rejected,
            reason: None,
            notes,
            conflict: None,
        }
    }
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

/// Milliseconds since construction.
#[derive(Debug)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        SystemClock(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(t_ms: u64) -> Self {
        ManualClock(AtomicU64::new(t_ms))
    }

    pub fn set(&self, t_ms: u64) {
        self.0.store(t_ms, Ordering::SeqCst);
    }

    pub fn advance(&self, dt_ms: u64) {
        self.0.fetch_add(dt_ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub depth_bounds: DepthBounds,
    /// Zero disables conflict detection.
    pub conflict_window_ms: u64,
    pub power_budget_w: f64,
    pub circuit_power_w: f64,
    pub ee_tolerance: f64,
    /// Link addressed when the request text names none.
    pub default_target: LinkTarget,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            depth_bounds: DepthBounds::default(),
            conflict_window_ms: 250,
            power_budget_w: 1.0,
            circuit_power_w: 0.1,
            ee_tolerance: 1e-9,
            default_target: LinkTarget::new(1, 2),
        }
    }
}

struct WriterState {
    last_request_id: u64,
    window: ConflictWindow,
}

pub struct OrchestratorBuilder {
    store: Arc<ParamStore>,
    analyzer: Option<Arc<RuleBasedAnalyzer>>,
    codec: Option<Arc<dyn CodecBackend>>,
    remote_intent: Option<Arc<dyn IntentBackend>>,
    remote_sql: Option<Arc<dyn SqlBackend>>,
    config: OrchestratorConfig,
    clock: Option<Arc<dyn Clock>>,
    audit: Option<Arc<AuditLog>>,
}

impl OrchestratorBuilder {
    pub fn analyzer(mut self, analyzer: RuleBasedAnalyzer) -> Self {
        self.analyzer = Some(Arc::new(analyzer));
        self
    }

    pub fn codec(mut self, codec: Arc<dyn CodecBackend>) -> Self {
        self.codec = Some(codec);
        self
    }

    pub fn remote_intent(mut self, backend: Arc<dyn IntentBackend>) -> Self {
        self.remote_intent = Some(backend);
        self
    }

    pub fn remote_sql(mut self, backend: Arc<dyn SqlBackend>) -> Self {
        self.remote_sql = Some(backend);
        self
    }

    pub fn config(mut self, config: OrchestratorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn audit(mut self, audit: Arc<AuditLog>) -> Self {
        self.audit = Some(audit);
        self
    }

    /// Validates the wiring and writes a metrics row for every link.
    pub fn build(self) -> Result<Orchestrator, OrchestratorError> {
        let analyzer = self.analyzer.unwrap_or_default();
        let codec = self.codec.unwrap_or_else(|| Arc::new(Surrogate::shipped()));
        let cfg = self.config;
        let bounds = DepthBounds::new(cfg.depth_bounds.min, cfg.depth_bounds.max)
            .map_err(|e| OrchestratorError::InvalidConfig(e.to_string()))?;
        let (lo, hi) = codec.depth_bounds();
        if bounds.min < lo || bounds.max > hi {
            return Err(OrchestratorError::InvalidConfig(format!(
                "depth bounds [{}, {}] exceed codec range [{lo}, {hi}]",
                bounds.min, bounds.max
            )));
        }
        if !(cfg.power_budget_w > 0.0 && cfg.power_budget_w.is_finite()) {
            return Err(OrchestratorError::InvalidConfig("power_budget_w must be positive".into()));
        }
        if !(cfg.circuit_power_w >= 0.0 && cfg.circuit_power_w.is_finite()) {
            return Err(OrchestratorError::InvalidConfig(
                "circuit_power_w must be non-negative".into(),
            ));
        }
        analyzer
            .linkage()
            .validate(&self.store.read())
            .map_err(OrchestratorError::InvalidConfig)?;
        let orch = Orchestrator {
            store: self.store,
            analyzer,
            codec,
            remote_intent: self.remote_intent,
            remote_sql: self.remote_sql,
            config: cfg,
            clock: self.clock.unwrap_or_else(|| Arc::new(SystemClock::new())),
            writer: Mutex::new(WriterState {
                last_request_id: 0,
                window: ConflictWindow::new(cfg.conflict_window_ms),
            }),
            audit: self.audit.unwrap_or_default(),
            events: EventFeed::new(),
            history: RwLock::new(Vec::new()),
        };
        orch.bootstrap()?;
        Ok(orch)
    }
}

pub struct Orchestrator {
    store: Arc<ParamStore>,
    analyzer: Arc<RuleBasedAnalyzer>,
    codec: Arc<dyn CodecBackend>,
    remote_intent: Option<Arc<dyn IntentBackend>>,
    remote_sql: Option<Arc<dyn SqlBackend>>,
    config: OrchestratorConfig,
    clock: Arc<dyn Clock>,
    writer: Mutex<WriterState>,
    audit: Arc<AuditLog>,
    events: EventFeed,
    history: RwLock<Vec<MetricsSnapshot>>,
}

impl std::fmt::Debug for Orchestrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Orchestrator")
            .field("config", &self.config)
            .field("remote_intent", &self.remote_intent.as_ref().map(|b| b.name().to_string()))
            .field("remote_sql", &self.remote_sql.as_ref().map(|b| b.name().to_string()))
            .finish_non_exhaustive()
    }
}

type Step<T> = Result<T, String>;

impl Orchestrator {
    pub fn builder(store: Arc<ParamStore>) -> OrchestratorBuilder {
        OrchestratorBuilder {
            store,
            analyzer: None,
            codec: None,
            remote_intent: None,
            remote_sql: None,
            config: OrchestratorConfig::default(),
            clock: None,
            audit: None,
        }
    }

    /// Shipped seed, lexicon and surrogate.
    pub fn with_defaults() -> Result<Self, OrchestratorError> {
        Self::builder(Arc::new(SeedConfig::default_config().seed()?)).build()
    }

    pub fn store(&self) -> &Arc<ParamStore> {
        &self.store
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    pub fn linkage(&self) -> &SchemaLinkage {
        self.analyzer.linkage()
    }

    pub fn codec(&self) -> &dyn CodecBackend {
        self.codec.as_ref()
    }

    pub fn audit(&self) -> &Arc<AuditLog> {
        &self.audit
    }

    pub fn events(&self) -> &EventFeed {
        &self.events
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    /// Replays `path` into the store, then appends every later UPDATE.
    pub fn attach_persistence(&self, path: impl AsRef<std::path::Path>) -> Result<usize, OrchestratorError> {
        let _w = self.lock_writer();
        let n = self.store.attach_log(path)?;
        if n > 0 {
            self.history.write().unwrap_or_else(|e| e.into_inner()).extend(self.metrics_rows()?);
        }
        Ok(n)
    }

    pub fn links(&self) -> Result<Vec<LinkRecord>, OrchestratorError> {
        let stmt = parse_sql(&LinkRecord::select_sql(""))?;
        Ok(LinkRecord::from_result(&self.store.execute(&stmt)?)?)
    }

    pub fn link(&self, link_id: i64) -> Result<Option<LinkRecord>, OrchestratorError> {
        let stmt = parse_sql(&LinkRecord::select_sql(&format!(" WHERE link_id = {link_id}")))?;
        Ok(LinkRecord::from_result(&self.store.execute(&stmt)?)?.into_iter().next())
    }

    /// Current surrogate metrics for `link`.
    pub fn metrics_for(&self, link: &LinkRecord, t_ms: u64) -> Result<MetricsSnapshot, PhyError> {
        phy::snapshot(self.codec.as_ref(), link, t_ms)
    }

    /// Every metrics snapshot recorded so far, oldest first.
    pub fn metrics_history(&self, link_id: Option<i64>) -> Vec<MetricsSnapshot> {
        self.history
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .filter(|s| link_id.is_none_or(|id| s.link_id == id))
            .cloned()
            .collect()
    }

    pub fn handle_request(&self, user_id: &str, text: &str) -> RequestOutcome {
        let t = self.clock.now_ms();
        self.handle_request_at(user_id, text, t)
    }

    /// As [`Orchestrator::handle_request`] with an explicit timestamp.
    pub fn handle_request_at(&self, user_id: &str, text: &str, t_ms: u64) -> RequestOutcome {
        let mut notes = Vec::new();
        let analysis = self.analyze(text, &mut notes);
        self.commit(user_id, text, analysis, notes, t_ms)
    }

    /// Analyzes all requests in parallel, then commits them in slice order,
    /// all stamped `t_ms`.
    pub fn handle_batch(&self, requests: &[(&str, &str)], t_ms: u64) -> Vec<RequestOutcome> {
        let analyses: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = requests
                .iter()
                .map(|(_, text)| {
                    s.spawn(move || {
                        let mut notes = Vec::new();
                        let a = self.analyze(text, &mut notes);
                        (a, notes)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("analysis thread")).collect()
        });
        requests
            .iter()
            .zip(analyses)
            .map(|((user, text), (a, notes))| self.commit(user, text, a, notes, t_ms))
            .collect()
    }

    /// Runs a scenario, one line at a time, at the recorded timestamps.
    pub fn replay(&self, lines: &[ScenarioLine]) -> Result<ReplayReport, OrchestratorError> {
        let outcomes = lines
            .iter()
            .map(|l| self.handle_request_at(&l.user_id, &l.text, l.t_ms))
            .collect();
        Ok(ReplayReport {
            outcomes,
            links: self.links()?,
            fingerprint: self.store.fingerprint(),
        })
    }

    fn lock_writer(&self) -> MutexGuard<'_, WriterState> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn analyze(&self, text: &str, notes: &mut Vec<String>) -> Result<Intent, IntentError> {
        let target = self.config.default_target;
        if let Some(remote) = &self.remote_intent {
            match remote.analyze(text, target) {
                Ok(intent) => return Ok(intent),
                Err(e) => notes.push(format!(
                    "intent backend `{}` failed ({e}); used rule-based analysis",
                    remote.name()
                )),
            }
        }
        self.analyzer.analyze(text, target)
    }

    fn commit(
        &self,
        user_id: &str,
        text: &str,
        analysis: Result<Intent, IntentError>,
        notes: Vec<String>,
        t_ms: u64,
    ) -> RequestOutcome {
        let mut w = self.lock_writer();
        w.last_request_id += 1;
        let mut out = RequestOutcome::new(w.last_request_id, user_id, text, t_ms, notes);
        match analysis {
            Err(e) => {
                out.status = match e {
                    IntentError::NoActuatableParameter(_) => Status::Rejected,
                    _ => Status::Unrecognized,
                };
                out.reason = Some(e.to_string());
                out.before = self.peek(self.config.default_target, t_ms);
                out.after = out.before.clone();
            }
            Ok(intent) => {
                out.controlled = Some(print_controlled(&ControlledCommand::from_intent(&intent)));
                let pending = PendingRequest {
                    request_id: out.request_id,
                    user_id: user_id.to_string(),
                    target: intent.target,
                    parameter: intent.parameter.clone(),
                    direction: intent.direction,
                };
                if let Some(report) = w.window.check(&pending, t_ms) {
                    out.status = Status::Conflicted;
                    out.reason = Some(format!(
                        "opposes request {} on {} {} in window {}",
                        report.winner, intent.target, intent.parameter, report.window_id
                    ));
                    out.conflict = Some(report);
                    out.before = self.peek(intent.target, t_ms);
                    out.after = out.before.clone();
                } else {
                    match self.execute(&intent, &mut out, t_ms) {
                        Ok(status) => {
                            out.status = status;
                            w.window.admit(pending);
                        }
                        Err(reason) => {
                            out.status = Status::Rejected;
                            out.reason = Some(reason);
                            out.after = out.before.clone();
                        }
                    }
                }
                out.intent = Some(intent);
            }
        }
        log::info!(
            "request {} from {}: {:?}{}",
            out.request_id,
            out.user_id,
            out.status,
            out.reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default()
        );
        self.audit.append(AuditEntry::Request(AuditRecord::from(&out)));
        self.events.publish(out.clone());
        out
    }

    /// Metrics for a link without issuing SQL on the request's behalf.
    fn peek(&self, target: LinkTarget, t_ms: u64) -> Option<MetricsSnapshot> {
        let db = self.store.read();
        let stmt = parse_sql(&LinkRecord::select_sql(&target_where(target))).ok()?;
        let link = LinkRecord::from_result(&db.query(&stmt).ok()?).ok()?.into_iter().next()?;
        self.metrics_for(&link, t_ms).ok()
    }

    fn issue(&self, out: &mut RequestOutcome, stmt: &Statement) -> Step<QueryResult> {
        out.sql_issued.push(stmt.to_string());
        self.store.execute(stmt).map_err(|e| e.to_string())
    }

    fn issue_all(&self, out: &mut RequestOutcome, stmts: &[Statement]) -> Step<Vec<QueryResult>> {
        out.sql_issued.extend(stmts.iter().map(Statement::to_string));
        self.store.execute_all(stmts).map_err(|e| e.to_string())
    }

    /// Remote SQL if a backend is wired and its output passes validation,
    /// else `expected`.
    fn checked_sql(&self, request: SqlRequest, expected: Statement, out: &mut RequestOutcome) -> Statement {
        let Some(remote) = &self.remote_sql else {
            return expected;
        };
        match remote.generate(&request) {
            Ok(text) => match validate_remote_sql(&text, &expected, self.linkage()) {
                Ok(stmt) => stmt,
                Err(e) => {
                    out.notes.push(format!("{e}; used deterministic SQL"));
                    expected
                }
            },
            Err(e) => {
                out.notes.push(format!(
                    "SQL backend `{}` failed ({e}); used deterministic SQL",
                    remote.name()
                ));
                expected
            }
        }
    }

    fn read_link(&self, out: &mut RequestOutcome, target: LinkTarget) -> Step<LinkRecord> {
        let stmt = parse_sql(&LinkRecord::select_sql(&target_where(target))).map_err(|e| e.to_string())?;
        let res = self.issue(out, &stmt)?;
        LinkRecord::from_result(&res)
            .map_err(|e| e.to_string())?
            .into_iter()
            .next()
            .ok_or_else(|| format!("no link from transmitter {} to receiver {}", target.tx_id, target.rx_id))
    }

    fn execute(&self, intent: &Intent, out: &mut RequestOutcome, t_ms: u64) -> Step<Status> {
        let linkage = self.linkage();
        let expected = to_select_statement(intent, linkage).map_err(|e| e.to_string())?;
        let request = SqlRequest::select(&ControlledCommand::from_intent(intent), linkage);
        let select = self.checked_sql(request, expected, out);
        let current = self
            .issue(out, &select)?
            .scalar()
            .cloned()
            .ok_or_else(|| {
                format!(
                    "no link from transmitter {} to receiver {}",
                    intent.target.tx_id, intent.target.rx_id
                )
            })?;
        let link = self.read_link(out, intent.target)?;
        let before = self.metrics_for(&link, t_ms).map_err(|e| e.to_string())?;
        out.before = Some(before.clone());

        let (table, _) = linkage.resolve(&intent.parameter).expect("resolved above");
        let mut retrieved = BTreeMap::from([(intent.parameter.clone(), current.clone())]);
        for column in linkage.columns_of(table) {
            if let Some(v) = link_value(&link, column) {
                retrieved.entry(column.to_string()).or_insert(v);
            }
        }
        let limits = PlanLimits {
            depth: self.config.depth_bounds,
            power_budget_w: self.config.power_budget_w,
        };
        out.split = Some(classify_params(intent, &retrieved, &limits).map_err(|e| e.to_string())?);

        match intent.parameter.as_str() {
            "encoding_depth" => {
                let depth = current.as_i64().ok_or("stored encoding depth is not an integer")?;
                self.execute_depth(intent, depth, link, before, out, t_ms)
            }
            "tx_power_w" => self.execute_power(before, out),
            other => Err(format!("no planner for parameter `{other}`")),
        }
    }

    fn execute_depth(
        &self,
        intent: &Intent,
        current: i64,
        mut link: LinkRecord,
        before: MetricsSnapshot,
        out: &mut RequestOutcome,
        t_ms: u64,
    ) -> Step<Status> {
        let plan = plan_depth_update(intent.target, intent.direction, current, self.config.depth_bounds)
            .map_err(|e| e.to_string())?;
        out.plan = Some(Plan::Depth(plan.clone()));
        if plan.saturated {
            out.after = Some(before);
            return Ok(Status::Saturated);
        }
        let expected = to_update_statement(&plan, self.linkage()).map_err(|e| e.to_string())?;
        let request = SqlRequest::update(&expected, self.linkage());
        let update = self.checked_sql(request, expected, out);
        link.encoding_depth = plan.new_depth;
        let after = self.metrics_for(&link, t_ms).map_err(|e| e.to_string())?;
        let mut batch = vec![update];
        batch.extend(self.metrics_update(&after));
        let results = self.issue_all(out, &batch)?;
        if results[0].affected() != 1 {
            return Err(format!("update touched {} rows", results[0].affected()));
        }
        self.push_history([after.clone()]);
        out.after = Some(after);
        Ok(Status::Applied)
    }

    fn execute_power(&self, before: MetricsSnapshot, out: &mut RequestOutcome) -> Step<Status> {
        let links = {
            let stmt = parse_sql(&LinkRecord::select_sql("")).map_err(|e| e.to_string())?;
            LinkRecord::from_result(&self.issue(out, &stmt)?).map_err(|e| e.to_string())?
        };
        let problem = EeProblem {
            users: links
                .iter()
                .map(|l| EeUser {
                    bandwidth_hz: l.bandwidth_hz,
                    channel_gain: l.channel_gain,
                    noise_psd: l.noise_psd,
                })
                .collect(),
            power_budget_w: self.config.power_budget_w,
            circuit_power_w: self.config.circuit_power_w,
        };
        let current: Vec<f64> = links.iter().map(|l| l.tx_power_w).collect();
        let alloc = solve_ee(&problem, self.config.ee_tolerance).map_err(|e| e.to_string())?;
        let changes: Vec<PowerPlan> = links
            .iter()
            .zip(&alloc.powers)
            .filter(|(l, p)| (*p - l.tx_power_w).abs() > 1e-12 * l.tx_power_w.abs().max(1e-12))
            .map(|(l, &p)| PowerPlan {
                target: LinkTarget::new(l.tx_id, l.rx_id),
                current_power_w: l.tx_power_w,
                new_power_w: p,
            })
            .collect();
        out.plan = Some(Plan::Power(PowerReallocation {
            changes: changes.clone(),
            energy_efficiency_before: problem.energy_efficiency(&current),
            energy_efficiency_after: alloc.energy_efficiency,
        }));
        out.after = Some(before);
        if changes.is_empty() {
            return Ok(Status::Saturated);
        }
        let mut batch = Vec::with_capacity(changes.len());
        for plan in &changes {
            let expected = to_update_statement(plan, self.linkage()).map_err(|e| e.to_string())?;
            let request = SqlRequest::update(&expected, self.linkage());
            batch.push(self.checked_sql(request, expected, out));
        }
        self.issue_all(out, &batch)?;
        Ok(Status::Applied)
    }

    fn metrics_update(&self, m: &MetricsSnapshot) -> Option<Statement> {
        self.store.read().table(METRICS).ok()?;
        Some(Statement::Update(Update {
            table: METRICS.into(),
            assignments: metrics_values(m)
                .into_iter()
                .filter(|(c, _)| *c != "link_id")
                .map(|(column, v)| Assignment {
                    column: column.into(),
                    expr: Expr::Literal(v),
                })
                .collect(),
            predicate: vec![Comparison {
                column: "link_id".into(),
                op: CmpOp::Eq,
                value: Value::Integer(m.link_id),
            }],
        }))
    }

    fn push_history(&self, snaps: impl IntoIterator<Item = MetricsSnapshot>) {
        self.history.write().unwrap_or_else(|e| e.into_inner()).extend(snaps);
    }

    fn metrics_rows(&self) -> Result<Vec<MetricsSnapshot>, OrchestratorError> {
        self.links()?
            .iter()
            .map(|l| Ok(self.metrics_for(l, 0)?))
            .collect()
    }

    /// Writes a metrics row for every link at `t = 0`: inserted if missing,
    /// overwritten if it disagrees with the codec.
    fn bootstrap(&self) -> Result<(), OrchestratorError> {
        let snaps = self.metrics_rows()?;
        let db = self.store.snapshot();
        if let Ok(table) = db.table(METRICS) {
            let schema = table.schema.clone();
            for snap in &snaps {
                let values: BTreeMap<&str, Value> = metrics_values(snap).into_iter().collect();
                let row: Vec<Value> = schema
                    .columns
                    .iter()
                    .map(|c| {
                        values.get(c.name.as_str()).cloned().ok_or_else(|| {
                            OrchestratorError::InvalidConfig(format!(
                                "metrics table has unexpected column `{}`",
                                c.name
                            ))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let pk = schema.pk_index();
                match table.rows.iter().find(|r| r[pk] == Value::Integer(snap.link_id)) {
                    None => self.store.insert_row(METRICS, row)?,
                    Some(existing) if *existing != row => {
                        let stmt = self.metrics_update(snap).expect("metrics table exists");
                        self.store.execute(&stmt)?;
                    }
                    Some(_) => {}
                }
            }
        }
        self.push_history(snaps);
        Ok(())
    }
}

fn target_where(t: LinkTarget) -> String {
    format!(" WHERE tx_id = {} AND rx_id = {}", t.tx_id, t.rx_id)
}

fn link_value(link: &LinkRecord, column: &str) -> Option<Value> {
    Some(match column {
        "encoding_depth" => Value::Integer(link.encoding_depth),
        "snr_db" => Value::Real(link.snr_db),
        "channel" => Value::Text(link.channel.clone()),
        "bandwidth_hz" => Value::Real(link.bandwidth_hz),
        "channel_gain" => Value::Real(link.channel_gain),
        "tx_power_w" => Value::Real(link.tx_power_w),
        "noise_psd" => Value::Real(link.noise_psd),
        _ => return None,
    })
}

fn metrics_values(m: &MetricsSnapshot) -> Vec<(&'static str, Value)> {
    vec![
        ("link_id", Value::Integer(m.link_id)),
        ("depth", Value::Integer(m.depth)),
        ("snr_db", Value::Real(m.snr_db)),
        ("channel", Value::Text(m.channel.to_string())),
        ("accuracy", Value::Real(m.accuracy)),
        ("latency_ms", Value::Real(m.latency_ms)),
        ("t_ms", Value::Integer(m.t_ms as i64)),
    ]
}

/// Rebuilds a store from its seed and the UPDATEs of every Applied record.
pub fn rebuild_from_audit(
    seed: &SeedConfig,
    codec: Arc<dyn CodecBackend>,
    records: &[AuditRecord],
) -> Result<ParamStore, OrchestratorError> {
    let store = Arc::new(seed.seed()?);
    Orchestrator::builder(store.clone()).codec(codec).build()?;
    for r in records.iter().filter(|r| r.status == Status::Applied) {
        let updates: Vec<Statement> = r
            .sql
            .iter()
            .map(|s| parse_sql(s))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|s| matches!(s, Statement::Update(_)))
            .collect();
        store.execute_all(&updates)?;
    }
    Ok(Arc::try_unwrap(store).unwrap_or_else(|s| ParamStore::new(s.snapshot(), s.checks_enabled())))
}
