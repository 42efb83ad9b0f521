use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::optimizer::DepthBounds;
use crate::orchestrator::OrchestratorConfig;

/// Remote completion backend shared by the intent and SQL stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub enabled: bool,
    /// Base of an OpenAI-style API; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub timeout_ms: u64,
    /// Name of the environment variable holding the bearer token.
    pub auth_env_var: String,
    pub max_concurrency: usize,
    /// Use the remote backend for intent analysis.
    pub intent: bool,
    /// Use the remote backend for SQL generation.
    pub sql: bool,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            enabled: false,
            base_url: "http://127.0.0.1:11434/v1".into(),
            model: "qwen2.5".into(),
            timeout_ms: 5000,
            auth_env_var: "URCSC_REMOTE_TOKEN".into(),
            max_concurrency: 4,
            intent: true,
            sql: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub listen: String,
    /// Shipped seed when absent.
    pub seed_file: Option<PathBuf>,
    /// Shipped anchors when absent.
    pub anchor_file: Option<PathBuf>,
    /// Shipped lexicon when absent. A file given here is reloaded when its
    /// modification time changes.
    pub lexicon_file: Option<PathBuf>,
    pub depth_bounds: DepthBounds,
    pub conflict_window_ms: u64,
    pub power_budget_w: f64,
    pub circuit_power_w: f64,
    pub remote: RemoteConfig,
    pub persistence_log: Option<PathBuf>,
    pub audit_log: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        let o = OrchestratorConfig::default();
        GatewayConfig {
            listen: "127.0.0.1:8080".into(),
            seed_file: None,
            anchor_file: None,
            lexicon_file: None,
            depth_bounds: o.depth_bounds,
            conflict_window_ms: o.conflict_window_ms,
            power_budget_w: o.power_budget_w,
            circuit_power_w: o.circuit_power_w,
            remote: RemoteConfig::default(),
            persistence_log: None,
            audit_log: None,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> GatewayError {
    GatewayError::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl GatewayConfig {
    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let cfg: GatewayConfig = serde_json::from_str(text).map_err(|e| invalid("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        let mut cfg: GatewayConfig =
            serde_json::from_str(&text).map_err(|e| invalid("<document>", format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            for p in [
                &mut cfg.seed_file,
                &mut cfg.anchor_file,
                &mut cfg.lexicon_file,
                &mut cfg.persistence_log,
                &mut cfg.audit_log,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for (field, path) in [
            ("seed_file", &self.seed_file),
            ("anchor_file", &self.anchor_file),
            ("lexicon_file", &self.lexicon_file),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(invalid(field, format!("{} is not a readable file", p.display())));
                }
            }
        }
        if self.depth_bounds.min >= self.depth_bounds.max {
            return Err(invalid(
                "depth_bounds",
                format!("min {} must be below max {}", self.depth_bounds.min, self.depth_bounds.max),
            ));
        }
        if !(self.power_budget_w > 0.0 && self.power_budget_w.is_finite()) {
            return Err(invalid("power_budget_w", "must be a positive number"));
        }
        if !(self.circuit_power_w >= 0.0 && self.circuit_power_w.is_finite()) {
            return Err(invalid("circuit_power_w", "must be non-negative"));
        }
        let r = &self.remote;
        if r.timeout_ms == 0 {
            return Err(invalid("remote.timeout_ms", "must be positive"));
        }
        if r.max_concurrency == 0 {
            return Err(invalid("remote.max_concurrency", "must be positive"));
        }
        if r.enabled {
            if r.base_url.trim().is_empty() {
                return Err(invalid("remote.base_url", "required when remote is enabled"));
            }
            if self.remote_token().is_none() {
                return Err(invalid(
                    "remote.auth_env_var",
                    format!("environment variable {} is not set", r.auth_env_var),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn remote_token(&self) -> Option<String> {
        std::env::var(&self.remote.auth_env_var).ok().filter(|t| !t.is_empty())
    }

    pub fn orchestrator_config(&self) -> OrchestratorConfig {
        OrchestratorConfig {
            depth_bounds: self.depth_bounds,
            conflict_window_ms: self.conflict_window_ms,
            power_budget_w: self.power_budget_w,
            circuit_power_w: self.circuit_power_w,
            ..OrchestratorConfig::default()
        }
    }
}
