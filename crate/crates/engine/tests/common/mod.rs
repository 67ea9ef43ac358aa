#![allow(dead_code)]

use std::collections::HashMap;
use std::time::Duration;

use motif_core::cop::{DatasetRole, Domain};
use motif_core::solvers::{Framework, StrategySet};
use motif_engine::config::ExperimentConfig;
use motif_engine::gateway::{ChatBackend, GenerateOptions, MockFixture, ScriptedMock};
use motif_engine::harness::{source_digest, Budget, EvalStatus, EvaluationResult, HarnessState, SystemEvaluator};
use motif_engine::runlog::RunLog;
use motif_engine::session::{Counters, SearchParams, Session, SourcePool};

/// Cost table evaluator: a set costs `base` times the product of the
/// factors of its slot sources; unknown sources have factor 1.
pub struct ScriptedEvaluator {
    pub domain: Domain,
    pub base: f64,
    pub test_base: f64,
    pub factors: HashMap<String, f64>,
    pub failures: HashMap<String, EvalStatus>,
    pub runs_per_eval: u64,
    pub accesses: Vec<DatasetRole>,
    state: HarnessState,
}

impl ScriptedEvaluator {
    pub fn new(domain: Domain, base: f64) -> Self {
        Self {
            domain,
            base,
            test_base: base * 2.0,
            factors: HashMap::new(),
            failures: HashMap::new(),
            runs_per_eval: 5,
            accesses: Vec::new(),
            state: HarnessState::default(),
        }
    }

    pub fn with_budget(mut self, limit: Option<u64>) -> Self {
        self.state.budget = Budget::new(limit);
        self
    }

    pub fn factor(mut self, source: &str, f: f64) -> Self {
        self.factors.insert(source_digest(source), f);
        self
    }

    pub fn failing(mut self, source: &str, status: EvalStatus) -> Self {
        self.failures.insert(source_digest(source), status);
        self
    }

    pub fn cost_of(&self, set: &StrategySet, role: DatasetRole) -> Result<f64, EvalStatus> {
        let mut c = match role {
            DatasetRole::Train => self.base,
            DatasetRole::Test => self.test_base,
        };
        for s in &set.slots {
            let d = source_digest(&s.source(self.domain));
            if let Some(st) = self.failures.get(&d) {
                return Err(*st);
            }
            c *= self.factors.get(&d).copied().unwrap_or(1.0);
        }
        Ok(c)
    }
}

impl SystemEvaluator for ScriptedEvaluator {
    fn evaluate(&mut self, set: &StrategySet, role: DatasetRole, baseline: Option<f64>) -> EvaluationResult {
        self.accesses.push(role);
        self.state.budget.candidates += 1;
        if role == DatasetRole::Train && !self.state.budget.can_afford(self.runs_per_eval) {
            return EvaluationResult::failed(EvalStatus::BudgetExhausted, "budget").against(baseline);
        }
        if role == DatasetRole::Train {
            self.state.budget.used += self.runs_per_eval;
        }
        let mut r = match self.cost_of(set, role) {
            Ok(c) => EvaluationResult::ok(vec![c]),
            Err(st) => EvaluationResult::failed(st, "scripted failure"),
        };
        r.instance_runs = self.runs_per_eval;
        r.against(baseline)
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

pub fn session(framework: Framework, domain: Domain, evaluator: Box<dyn SystemEvaluator>, backend: Box<dyn ChatBackend>) -> Session {
    Session {
        framework,
        domain,
        params: SearchParams::default(),
        generation: GenerateOptions { retries: 3, backoff: Duration::ZERO },
        evaluator,
        backend,
        log: RunLog::in_memory(),
        pool: SourcePool::default(),
        counters: Counters::default(),
    }
}

pub fn identity() -> Box<dyn ChatBackend> {
    Box::new(ScriptedMock::new(MockFixture::identity()))
}

/// Small, fast in-process DR/TSP experiment.
pub fn small_config() -> ExperimentConfig {
    ExperimentConfig::default()
        .with_overrides(&[
            "framework=dr".into(),
            "domain=tsp".into(),
            "train_size=12".into(),
            "train_count=3".into(),
            "test_size=16".into(),
            "test_count=3".into(),
            "master_seed=7".into(),
            "backoff_ms=0".into(),
        ])
        .unwrap()
}
