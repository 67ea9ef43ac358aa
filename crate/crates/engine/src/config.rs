//! Flat key/value experiment configuration, stored as TOML.

use std::path::{Path, PathBuf};
use std::time::Duration;

use motif_core::cop::Domain;
use motif_core::rng::derive_named;
use motif_core::solvers::{Framework, SolverParams, StrategySet};
use motif_core::RewardParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gateway::GenerateOptions;
use crate::session::SearchParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutorKind {
    /// Native twins of known sources; no child processes.
    InProcess,
    /// External strategy runner over the wire protocol.
    Runner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub framework: Framework,
    pub domain: Domain,
    /// Slots to search; empty means every searchable slot.
    pub slots: Vec<usize>,
    pub master_seed: u64,

    pub train_size: usize,
    pub train_count: usize,
    /// Zero derives the seed from `master_seed`.
    pub train_seed: u64,
    pub test_size: usize,
    pub test_count: usize,
    pub test_seed: u64,

    /// Zero keeps the per-domain default.
    pub gls_moves: usize,
    pub gls_iterations: usize,
    pub aco_ants: usize,
    pub aco_iterations: usize,
    pub dr_rate: f64,

    pub t_outer: usize,
    pub t_inner: usize,
    pub t_final: usize,
    pub c_outer: f64,
    pub c_inner: f64,
    pub epsilon: f64,
    pub k: f64,
    pub lambda: f64,
    pub history_depth: usize,
    pub fallback_after: u32,
    pub failure_floor: f64,

    /// Train instance runs allowed; zero means unlimited.
    pub budget: u64,
    pub instance_timeout_s: f64,

    pub backend: BackendKind,
    /// Mock fixture file; empty means the identity mock.
    pub mock_fixture: String,
    pub http_endpoint: String,
    pub http_model: String,
    pub temperature: f64,
    pub http_timeout_s: f64,
    /// Environment variable that holds the backend credential.
    pub api_key_env: String,
    pub retries: u32,
    pub backoff_ms: u64,

    pub executor: ExecutorKind,
    pub runner_command: Vec<String>,
    pub call_timeout_s: f64,

    pub embedding_dim: usize,
    pub novelty_k: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SearchParams::default();
        Self {
            framework: Framework::Dr,
            domain: Domain::Tsp,
            slots: Vec::new(),
            master_seed: 0,
            train_size: 50,
            train_count: 5,
            train_seed: 0,
            test_size: 100,
            test_count: 16,
            test_seed: 0,
            gls_moves: 0,
            gls_iterations: 0,
            aco_ants: 0,
            aco_iterations: 0,
            dr_rate: 0.2,
            t_outer: s.t_outer,
            t_inner: s.t_inner,
            t_final: s.t_final,
            c_outer: s.c_outer,
            c_inner: s.c_inner,
            epsilon: s.epsilon,
            k: s.reward.k,
            lambda: s.reward.lambda,
            history_depth: s.history_depth,
            fallback_after: s.fallback_after,
            failure_floor: s.failure_floor,
            budget: 0,
            instance_timeout_s: 10.0,
            backend: BackendKind::Mock,
            mock_fixture: String::new(),
            http_endpoint: "https://api.openai.com/v1/chat/completions".into(),
            http_model: String::new(),
            temperature: 1.0,
            http_timeout_s: 120.0,
            api_key_env: crate::gateway::DEFAULT_KEY_ENV.into(),
            retries: 3,
            backoff_ms: 500,
            executor: ExecutorKind::InProcess,
            runner_command: vec!["python3".into(), "-m".into(), "motif_runner".into()],
            call_timeout_s: 2.0,
            embedding_dim: 256,
            novelty_k: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write config: {0}")]
    Write(#[from] toml::ser::Error),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides; values parse as TOML and fall back
    /// to plain strings.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(&self.to_toml()?)?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Override(o.clone()));
            }
            let value = match toml::from_str::<toml::Table>(&format!("x = {v}")) {
                Ok(mut t) => t.remove("x").expect("parsed key"),
                Err(_) => toml::Value::String(v.to_string()),
            };
            table.insert(k.to_string(), value);
        }
        let c: Self = table.try_into()?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !self.framework.supports(self.domain) {
            return bad(format!("framework {} does not support {}", self.framework, self.domain));
        }
        let searchable = self.searchable_slots_unchecked();
        for s in &self.slots {
            if !searchable.contains(s) {
                return bad(format!("slot {s} is not searchable for {}/{}", self.framework, self.domain));
            }
        }
        if self.train_size < 2 || self.test_size < 2 || self.train_count == 0 || self.test_count == 0 {
            return bad("datasets need at least one instance of size 2 or more".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) || !(self.k > 0.0) {
            return bad("lambda must lie in [0, 1] and k must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dr_rate) {
            return bad(format!("dr_rate {} is outside [0, 1)", self.dr_rate));
        }
        if self.backend == BackendKind::Http && self.http_model.trim().is_empty() {
            return bad("the http backend needs http_model".into());
        }
        if self.executor == ExecutorKind::Runner && self.runner_command.is_empty() {
            return bad("runner_command is empty".into());
        }
        Ok(())
    }

    fn searchable_slots_unchecked(&self) -> Vec<usize> {
        StrategySet::baseline(self.framework, self.domain).map(|s| s.searchable()).unwrap_or_default()
    }

    pub fn searchable_slots(&self) -> Vec<usize> {
        if self.slots.is_empty() {
            self.searchable_slots_unchecked()
        } else {
            let mut s = self.slots.clone();
            s.sort_unstable();
            s.dedup();
            s
        }
    }

    /// Hash of every field that affects results.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().expect("config serializes").as_bytes()))
    }

    pub fn train_seed(&self) -> u64 {
        if self.train_seed != 0 {
            self.train_seed
        } else {
            derive_named(self.master_seed, "train")
        }
    }

    pub fn test_seed(&self) -> u64 {
        if self.test_seed != 0 {
            self.test_seed
        } else {
            derive_named(self.master_seed, "test")
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        let mut p = SolverParams::defaults_for(self.domain).with_seed(derive_named(self.master_seed, "solver"));
        let pick = |v: usize, d: usize| if v == 0 { d } else { v };
        p.gls_moves = pick(self.gls_moves, p.gls_moves);
        p.gls_iterations = pick(self.gls_iterations, p.gls_iterations);
        p.aco_ants = pick(self.aco_ants, p.aco_ants);
        p.aco_iterations = pick(self.aco_iterations, p.aco_iterations);
        p.dr_rate = self.dr_rate;
        p
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            t_outer: self.t_outer,
            t_inner: self.t_inner,
            t_final: self.t_final,
            c_outer: self.c_outer,
            c_inner: self.c_inner,
            epsilon: self.epsilon,
            reward: RewardParams { lambda: self.lambda, k: self.k },
            history_depth: self.history_depth,
            fallback_after: self.fallback_after,
            failure_floor: self.failure_floor,
        }
    }

    pub fn generate_options(&self) -> GenerateOptions {
        GenerateOptions { retries: self.retries, backoff: Duration::from_millis(self.backoff_ms) }
    }

    pub fn budget_limit(&self) -> Option<u64> {
        (self.budget > 0).then_some(self.budget)
    }

    /// Fixture path resolved against `base` when relative.
    pub fn fixture_path(&self, base: &Path) -> Option<PathBuf> {
        if self.mock_fixture.trim().is_empty() {
            return None;
        }
        let p = PathBuf::from(&self.mock_fixture);
        Some(if p.is_absolute() { p } else { base.join(p) })
    }
}
