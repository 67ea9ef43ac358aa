//! Runs a strategy set over a dataset and turns the per-instance costs
//! into one evaluation result.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use motif_core::cop::DatasetRole;
use motif_core::reward::improvement as percent_gain;
use motif_core::rng::derive_seed;
use motif_core::solvers::{normalize_source, solve, SolverError, SolverParams, StrategyError, StrategyExecutor, StrategySet};
use motif_core::Dataset;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalStatus {
    Ok,
    CompileError,
    RuntimeError,
    Timeout,
    InvalidOutput,
    /// The generator never produced usable code.
    GenerationFailure,
    /// Not enough budget left to run every instance.
    BudgetExhausted,
}

impl EvalStatus {
    pub fn is_ok(self) -> bool {
        self == EvalStatus::Ok
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalStatus::Ok => "ok",
            EvalStatus::CompileError => "compile-error",
            EvalStatus::RuntimeError => "runtime-error",
            EvalStatus::Timeout => "timeout",
            EvalStatus::InvalidOutput => "invalid-output",
            EvalStatus::GenerationFailure => "generation-failure",
            EvalStatus::BudgetExhausted => "budget-exhausted",
        }
    }

    pub fn of_strategy_error(e: &StrategyError) -> Self {
        match e {
            StrategyError::Compile(_) => EvalStatus::CompileError,
            StrategyError::Runtime(_) | StrategyError::Protocol(_) => EvalStatus::RuntimeError,
            StrategyError::Timeout(_) => EvalStatus::Timeout,
            StrategyError::InvalidOutput(_) => EvalStatus::InvalidOutput,
        }
    }

    pub fn of_solver_error(e: &SolverError) -> Self {
        match e {
            SolverError::Strategy(s) => Self::of_strategy_error(s),
            SolverError::Cop(_) => EvalStatus::InvalidOutput,
            _ => EvalStatus::RuntimeError,
        }
    }
}

impl fmt::Display for EvalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Improvement in percent with failures mapped to `-inf`. An undefined
/// baseline yields NaN, which reward shaping treats as a failure.
pub fn improvement(baseline: f64, cost: f64) -> f64 {
    percent_gain(baseline, cost).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub status: EvalStatus,
    /// One cost per instance; empty unless the status is ok.
    #[serde(with = "crate::numfmt::vec")]
    pub costs: Vec<f64>,
    #[serde(with = "crate::numfmt")]
    pub mean_cost: f64,
    #[serde(with = "crate::numfmt")]
    pub improvement: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Solver runs charged to the budget by this evaluation.
    pub instance_runs: u64,
    pub cached: bool,
    #[serde(skip)]
    pub wall: Duration,
}

impl EvaluationResult {
    pub fn ok(costs: Vec<f64>) -> Self {
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        Self {
            status: EvalStatus::Ok,
            costs,
            mean_cost: mean,
            improvement: 0.0,
            message: None,
            instance_runs: 0,
            cached: false,
            wall: Duration::ZERO,
        }
    }

    pub fn failed(status: EvalStatus, message: impl Into<String>) -> Self {
        debug_assert!(!status.is_ok());
        Self {
            status,
            costs: Vec::new(),
            mean_cost: f64::INFINITY,
            improvement: f64::NEG_INFINITY,
            message: Some(message.into()),
            instance_runs: 0,
            cached: false,
            wall: Duration::ZERO,
        }
    }

    /// Recomputes the improvement against `baseline` (0 when none is given).
    pub fn against(mut self, baseline: Option<f64>) -> Self {
        self.improvement = match (self.status.is_ok(), baseline) {
            (false, _) => f64::NEG_INFINITY,
            (true, Some(b)) => improvement(b, self.mean_cost),
            (true, None) => 0.0,
        };
        self
    }
}

/// Solver runs the search may still spend, plus a plain candidate counter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// `None` means unlimited.
    pub limit: Option<u64>,
    pub used: u64,
    /// Every candidate evaluation, cached or not.
    pub candidates: u64,
}

impl Budget {
    pub fn new(limit: Option<u64>) -> Self {
        Self { limit, used: 0, candidates: 0 }
    }

    pub fn remaining(&self) -> Option<u64> {
        self.limit.map(|l| l.saturating_sub(self.used))
    }

    pub fn can_afford(&self, runs: u64) -> bool {
        self.remaining().is_none_or(|r| r >= runs)
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == Some(0)
    }
}

/// Content hash of everything that determines an evaluation.
pub fn evaluation_key(set: &StrategySet, params: &SolverParams, dataset_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}|{}|{}\n", set.framework, set.domain, dataset_id));
    h.update(serde_json::to_string(params).expect("params serialize"));
    for imp in &set.slots {
        h.update(format!("\n@slot {}\n", imp.slot));
        h.update(normalize_source(&imp.source(set.domain)));
    }
    hex::encode(h.finalize())
}

/// Digest of one implementation's normalized source.
pub fn source_digest(source: &str) -> String {
    hex::encode(Sha256::digest(normalize_source(source).as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalCache {
    entries: BTreeMap<String, EvaluationResult>,
}

impl EvalCache {
    /// Never touches the budget.
    pub fn lookup(&self, key: &str) -> Option<EvaluationResult> {
        self.entries.get(key).cloned()
    }

    pub fn store(&mut self, key: String, result: EvaluationResult) {
        self.entries.insert(key, result);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Anything that can score a full strategy set. The search only talks to
/// this trait, so tests can swap in a scripted cost table.
pub trait SystemEvaluator {
    /// Mean cost of `set` on the dataset with `role`, with improvement
    /// computed against `baseline`.
    fn evaluate(&mut self, set: &StrategySet, role: DatasetRole, baseline: Option<f64>) -> EvaluationResult;

    fn budget(&self) -> &Budget;

    /// Persistent state restored on resume (budget counters, cache).
    fn state(&self) -> HarnessState;

    fn restore(&mut self, state: HarnessState);
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarnessState {
    pub budget: Budget,
    pub cache: EvalCache,
}

/// The real evaluator: solver runs through a strategy executor.
pub struct Harness {
    pub train: Dataset,
    pub test: Dataset,
    pub params: SolverParams,
    /// Wall-time cap per instance run.
    pub instance_timeout: Duration,
    executor: Box<dyn StrategyExecutor<f64>>,
    state: HarnessState,
}

impl Harness {
    pub fn new(
        train: Dataset,
        test: Dataset,
        params: SolverParams,
        executor: Box<dyn StrategyExecutor<f64>>,
        budget: Budget,
    ) -> Self {
        Self {
            train,
            test,
            params,
            instance_timeout: Duration::from_secs(10),
            executor,
            state: HarnessState { budget, cache: EvalCache::default() },
        }
    }

    pub fn cache(&self) -> &EvalCache {
        &self.state.cache
    }

    fn run(&mut self, set: &StrategySet, role: DatasetRole) -> EvaluationResult {
        let data = match role {
            DatasetRole::Train => &self.train,
            DatasetRole::Test => &self.test,
        };
        let started = Instant::now();
        self.executor.begin_candidate();
        let mut costs = Vec::with_capacity(data.len());
        let mut runs = 0;
        for (i, inst) in data.instances.iter().enumerate() {
            runs += 1;
            let params = self.params.with_seed(derive_seed(self.params.seed, i as u64));
            let t0 = Instant::now();
            let out = solve(set, inst, &params, self.executor.as_mut());
            if t0.elapsed() > self.instance_timeout {
                let mut r = EvaluationResult::failed(
                    EvalStatus::Timeout,
                    format!("instance {i} exceeded {:?}", self.instance_timeout),
                );
                r.instance_runs = runs;
                return r;
            }
            match out {
                Ok(o) if o.cost.is_finite() => costs.push(o.cost),
                Ok(o) => {
                    let mut r = EvaluationResult::failed(EvalStatus::InvalidOutput, format!("instance {i}: cost {}", o.cost));
                    r.instance_runs = runs;
                    return r;
                }
                Err(e) => {
                    let mut r = EvaluationResult::failed(EvalStatus::of_solver_error(&e), format!("instance {i}: {e}"));
                    r.instance_runs = runs;
                    return r;
                }
            }
        }
        let mut r = EvaluationResult::ok(costs);
        r.instance_runs = runs;
        r.wall = started.elapsed();
        r
    }
}

impl SystemEvaluator for Harness {
    fn evaluate(&mut self, set: &StrategySet, role: DatasetRole, baseline: Option<f64>) -> EvaluationResult {
        let data = match role {
            DatasetRole::Train => &self.train,
            DatasetRole::Test => &self.test,
        };
        let key = evaluation_key(set, &self.params, &data.id().to_string());
        let n = data.len() as u64;
        self.state.budget.candidates += 1;
        if let Some(mut hit) = self.state.cache.lookup(&key) {
            hit.cached = true;
            hit.instance_runs = 0;
            return hit.against(baseline);
        }
        // The held-out set is scored once at the end and never gated.
        if role == DatasetRole::Train && !self.state.budget.can_afford(n) {
            return EvaluationResult::failed(EvalStatus::BudgetExhausted, "evaluation budget exhausted").against(baseline);
        }
        let result = self.run(set, role);
        if role == DatasetRole::Train {
            self.state.budget.used += result.instance_runs;
        }
        self.state.cache.store(key, result.clone());
        result.against(baseline)
    }

    fn budget(&self) -> &Budget {
        &self.state.budget
    }

    fn state(&self) -> HarnessState {
        self.state.clone()
    }

    fn restore(&mut self, state: HarnessState) {
        self.state = state;
    }
}
