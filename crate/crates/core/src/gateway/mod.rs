//! Service surface: configuration, HTTP endpoints and the remote completion
//! client.

mod config;
pub mod remote;
mod server;

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;
use tokio::sync::oneshot;

use crate::intent::{HotLexicon, Lexicon, RuleBasedAnalyzer, SchemaLinkage};
use crate::orchestrator::{AuditLog, Orchestrator, OrchestratorError};
use crate::phy::{AnchorTable, Surrogate};
use crate::store::SeedConfig;

pub use config::{GatewayConfig, RemoteConfig};
pub use remote::{RemoteClient, RemoteError, RemoteIntentBackend, RemoteSqlBackend};
pub use server::{router, ApiError, AppState, EventBatch, LinkView, SubmitRequest, MAX_POLL_MS};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("cannot bind {addr}: {reason}")]
    BindFailure { addr: String, reason: String },
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("{0}")]
    Runtime(String),
}

fn invalid(field: &str, e: impl std::fmt::Display) -> GatewayError {
    GatewayError::InvalidConfig {
        field: field.into(),
        reason: e.to_string(),
    }
}

/// Seeds the store, calibrates the surrogate, wires backends and replays the
/// persistence log.
pub fn build_orchestrator(cfg: &GatewayConfig) -> Result<Orchestrator, GatewayError> {
    cfg.validate()?;
    let seed = match &cfg.seed_file {
        Some(p) => SeedConfig::load(p).map_err(|e| invalid("seed_file", e))?,
        None => SeedConfig::default_config(),
    };
    let table = match &cfg.anchor_file {
        Some(p) => AnchorTable::load(p).map_err(|e| invalid("anchor_file", format!("{}: {e}", p.display())))?,
        None => AnchorTable::shipped(),
    };
    let codec = Surrogate::new(table, (1, 12)).map_err(|e| invalid("anchor_file", e))?;
    let lexicon = match &cfg.lexicon_file {
        Some(p) => HotLexicon::watch(p).map_err(|e| invalid("lexicon_file", e))?,
        None => HotLexicon::fixed(Lexicon::default()),
    };
    let linkage = SchemaLinkage::default();
    let audit = Arc::new(match &cfg.audit_log {
        Some(p) => AuditLog::with_file(p)?,
        None => AuditLog::new(),
    });
    let store = Arc::new(seed.seed().map_err(|e| invalid("seed_file", e))?);
    let mut builder = Orchestrator::builder(store)
        .analyzer(RuleBasedAnalyzer::new(lexicon, linkage.clone()))
        .codec(Arc::new(codec))
        .config(cfg.orchestrator_config())
        .audit(audit.clone());
    if cfg.remote.enabled {
        let token = cfg.remote_token().ok_or_else(|| {
            invalid("remote.auth_env_var", format!("environment variable {} is not set", cfg.remote.auth_env_var))
        })?;
        let client = Arc::new(RemoteClient::new(&cfg.remote, token, Some(audit))?);
        if cfg.remote.intent {
            builder = builder.remote_intent(Arc::new(RemoteIntentBackend::new(client.clone(), linkage)));
        }
        if cfg.remote.sql {
            builder = builder.remote_sql(Arc::new(RemoteSqlBackend::new(client)));
        }
    }
    let orch = builder.build()?;
    if let Some(p) = &cfg.persistence_log {
        let n = orch.attach_persistence(p)?;
        log::info!("replayed {n} statements from {}", p.display());
    }
    Ok(orch)
}

/// A gateway serving on a background thread. Dropping it shuts it down.
pub struct RunningGateway {
    addr: SocketAddr,
    state: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<(), GatewayError>>>,
}

impl RunningGateway {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn orchestrator(&self) -> Option<&Arc<Orchestrator>> {
        self.state.get()
    }

    /// Blocks until seeding finishes, or returns the startup error.
    pub fn wait_ready(&mut self, timeout: Duration) -> Result<(), GatewayError> {
        let deadline = Instant::now() + timeout;
        while self.state.get().is_none() {
            if self.thread.as_ref().is_some_and(|t| t.is_finished()) {
                return self.join();
            }
            if Instant::now() >= deadline {
                return Err(GatewayError::Runtime("gateway did not become ready".into()));
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        Ok(())
    }

    /// Stops serving and waits for the thread.
    pub fn shutdown(mut self) -> Result<(), GatewayError> {
        self.join()
    }

    fn join(&mut self) -> Result<(), GatewayError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| GatewayError::Runtime("server thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for RunningGateway {
    fn drop(&mut self) {
        let _ = self.join();
    }
}

/// Validates `cfg`, binds its listen address and starts serving at once;
/// `/healthz` reports 503 until the store is seeded.
pub fn spawn(cfg: GatewayConfig) -> Result<RunningGateway, GatewayError> {
    cfg.validate()?;
    let listener = std::net::TcpListener::bind(&cfg.listen).map_err(|e| GatewayError::BindFailure {
        addr: cfg.listen.clone(),
        reason: e.to_string(),
    })?;
    listener
        .set_nonblocking(true)
        .map_err(|e| GatewayError::Runtime(e.to_string()))?;
    let addr = listener.local_addr().map_err(|e| GatewayError::Runtime(e.to_string()))?;
    let state = AppState::pending();
    let (tx, rx) = oneshot::channel();
    let thread_state = state.clone();
    let thread = std::thread::Builder::new()
        .name("gateway".into())
        .spawn(move || run(cfg, listener, thread_state, rx))
        .map_err(|e| GatewayError::Runtime(e.to_string()))?;
    Ok(RunningGateway {
        addr,
        state,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

fn run(
    cfg: GatewayConfig,
    listener: std::net::TcpListener,
    state: AppState,
    shutdown: oneshot::Receiver<()>,
) -> Result<(), GatewayError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| GatewayError::Runtime(e.to_string()))?;
    let result = rt.block_on(async {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(|e| GatewayError::Runtime(e.to_string()))?;
        let (fail_tx, fail_rx) = oneshot::channel();
        let setup_state = state.clone();
        // Seeding runs off the async workers; the remote client blocks.
        tokio::task::spawn_blocking(move || match build_orchestrator(&cfg) {
            Ok(o) => {
                setup_state.set(Arc::new(o));
                log::info!("gateway ready");
            }
            Err(e) => {
                let _ = fail_tx.send(e);
            }
        });
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        // A successful build drops `fail_tx`; only a sent error stops the server.
        let failure = tokio::spawn(async move {
            tokio::select! {
                _ = shutdown => { let _ = stop_tx.send(()); None }
                Ok(e) = fail_rx => { let _ = stop_tx.send(()); Some(e) }
            }
        });
        axum::serve(listener, router(state.clone()))
            .with_graceful_shutdown(async move {
                let _ = stop_rx.await;
            })
            .await
            .map_err(|e| GatewayError::Runtime(e.to_string()))?;
        match failure.await {
            Ok(Some(e)) => Err(e),
            _ => Ok(()),
        }
    });
    // The blocking remote client must not be dropped inside the runtime.
    drop(rt);
    drop(state);
    result
}

/// Serves `cfg` in the foreground until Ctrl-C.
pub fn serve(cfg: GatewayConfig) -> Result<(), GatewayError> {
    let gw = spawn(cfg)?;
    log::info!("listening on {}", gw.url());
    let (tx, rx) = std::sync::mpsc::channel::<()>();
    let waiter = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build();
        if let Ok(rt) = rt {
            rt.block_on(async {
                let _ = tokio::signal::ctrl_c().await;
            });
        }
        let _ = tx.send(());
    });
    // Either Ctrl-C or the server exiting on its own ends the wait.
    let mut gw = gw;
    loop {
        if rx.recv_timeout(Duration::from_millis(200)).is_ok() {
            break;
        }
        if gw.thread.as_ref().is_some_and(|t| t.is_finished()) {
            break;
        }
    }
    drop(waiter);
    gw.join()
}
