//! State shared by both search phases: evaluator, backend, log, the
//! source pool and the run counters.

use std::collections::BTreeMap;
use std::io;

use motif_core::cop::{DatasetRole, Domain};
use motif_core::solvers::{Framework, ImplKind, Provenance, SlotId, StrategyImpl, StrategySet};
use motif_core::RewardParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{generate, ChatBackend, GenerateOptions, Generation, GenerationError, PromptBundle, PromptError};
use crate::harness::{source_digest, EvalStatus, EvaluationResult, SystemEvaluator};
use crate::runlog::{LogRecord, RunLog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub t_outer: usize,
    pub t_inner: usize,
    pub t_final: usize,
    pub c_outer: f64,
    pub c_inner: f64,
    pub epsilon: f64,
    pub reward: RewardParams,
    pub history_depth: usize,
    /// Final-round failure streak that resets the working implementation.
    pub fallback_after: u32,
    /// Final-round results at or below this improvement count as failures.
    pub failure_floor: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            t_outer: 20,
            t_inner: 10,
            t_final: 10,
            c_outer: std::f64::consts::SQRT_2,
            c_inner: 0.01,
            epsilon: 1e-6,
            reward: RewardParams::default(),
            history_depth: 3,
            fallback_after: 3,
            failure_floor: -50.0,
        }
    }
}

/// Every implementation seen in the run, keyed by normalized source digest.
/// The first implementation registered under a digest is kept, so a
/// generated copy of the baseline resolves to the native baseline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourcePool {
    pub entries: BTreeMap<String, StrategyImpl>,
}

impl SourcePool {
    pub fn digest_of(imp: &StrategyImpl, domain: Domain) -> String {
        source_digest(&imp.source(domain))
    }

    pub fn intern(&mut self, imp: StrategyImpl, domain: Domain) -> String {
        let d = Self::digest_of(&imp, domain);
        self.entries.entry(d.clone()).or_insert(imp);
        d
    }

    pub fn get(&self, digest: &str) -> &StrategyImpl {
        self.entries.get(digest).unwrap_or_else(|| panic!("digest {digest} is not in the source pool"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Generation turns taken so far, across both phases.
    pub turn: u64,
    /// Backend requests issued, retries included.
    pub request: u64,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Generation(GenerationError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("run log: {0}")]
    Log(#[from] io::Error),
}

pub struct Session {
    pub framework: Framework,
    pub domain: Domain,
    pub params: SearchParams,
    pub generation: GenerateOptions,
    pub evaluator: Box<dyn SystemEvaluator>,
    pub backend: Box<dyn ChatBackend>,
    pub log: RunLog,
    pub pool: SourcePool,
    pub counters: Counters,
}

/// A generated candidate after evaluation.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub digest: String,
    pub result: EvaluationResult,
    pub summary: String,
    pub generation: Option<Generation>,
}

impl Session {
    pub fn intern(&mut self, imp: StrategyImpl) -> String {
        self.pool.intern(imp, self.domain)
    }

    pub fn source(&self, digest: &str) -> String {
        self.pool.get(digest).source(self.domain)
    }

    pub fn log(&mut self, record: LogRecord, wall: Option<std::time::Duration>) -> Result<u64, SearchError> {
        Ok(self.log.append(record, wall)?)
    }

    /// Evaluates `set` and logs the access.
    pub fn evaluate_logged(
        &mut self,
        set: &StrategySet,
        role: DatasetRole,
        baseline: Option<f64>,
        mut record: LogRecord,
    ) -> Result<EvaluationResult, SearchError> {
        let r = self.evaluator.evaluate(set, role, baseline);
        fill(&mut record, &r, role, baseline);
        self.log(record, Some(r.wall))?;
        Ok(r)
    }

    /// Generates an implementation for `slot` and evaluates it inside
    /// `system`. Unusable generations come back as a failed candidate whose
    /// digest is `fallback`. The returned record is filled but not yet
    /// logged, so the caller can add its reward.
    #[allow(clippy::too_many_arguments)]
    pub fn propose(
        &mut self,
        bundle: &PromptBundle,
        slot: SlotId,
        system: &StrategySet,
        baseline_cost: f64,
        fallback: &str,
        provenance: Provenance,
        mut record: LogRecord,
    ) -> Result<(Candidate, LogRecord), SearchError> {
        let gen = generate(bundle, self.backend.as_mut(), &self.generation, &mut self.counters.request);
        for x in self.backend.take_exchanges() {
            let mut r = LogRecord::new(&record.phase, "exchange");
            r.turn = record.turn;
            r.detail = Some(x);
            self.log(r, None)?;
        }
        record.turn = Some(provenance.turn);
        record.player = Some(provenance.player);
        record.slot = Some(slot.to_string());
        record.operator = Some(provenance.operator.clone());
        match gen {
            Ok(g) => {
                if let Some(u) = g.usage {
                    record.prompt_tokens = Some(u.prompt_tokens);
                    record.completion_tokens = Some(u.completion_tokens);
                }
                record.attempts = Some(g.attempts);
                let imp = StrategyImpl::external(slot, g.response.code.clone()).with_provenance(provenance);
                let digest = self.intern(imp);
                let installed = self.pool.get(&digest).clone();
                record.digest = Some(digest.clone());
                let result = self.evaluator.evaluate(&system.with_slot(installed), DatasetRole::Train, Some(baseline_cost));
                if result.status == EvalStatus::BudgetExhausted {
                    return Err(SearchError::BudgetExhausted);
                }
                fill(&mut record, &result, DatasetRole::Train, Some(baseline_cost));
                Ok((Candidate { digest, result, summary: g.response.summary.clone(), generation: Some(g) }, record))
            }
            Err(GenerationError::Exhausted { attempts, last, usage }) => {
                if let Some(u) = usage {
                    record.prompt_tokens = Some(u.prompt_tokens);
                    record.completion_tokens = Some(u.completion_tokens);
                }
                let result = EvaluationResult::failed(EvalStatus::GenerationFailure, last).against(Some(baseline_cost));
                record.attempts = Some(attempts);
                record.status = Some(result.status.as_str().to_string());
                record.mean_cost = Some(result.mean_cost);
                record.improvement = Some(result.improvement);
                record.digest = Some(fallback.to_string());
                record.message = result.message.clone();
                let c = Candidate { digest: fallback.to_string(), result, summary: "generation failed".into(), generation: None };
                Ok((c, record))
            }
            Err(e) => Err(SearchError::Generation(e)),
        }
    }
}

fn fill(record: &mut LogRecord, r: &EvaluationResult, role: DatasetRole, baseline: Option<f64>) {
    record.status = Some(r.status.as_str().to_string());
    record.dataset = Some(role.as_str().to_string());
    record.mean_cost = Some(r.mean_cost);
    record.improvement = baseline.map(|_| r.improvement);
    record.cached = Some(r.cached);
    record.message = r.message.clone();
}

/// External sources of one set, for writing final artifacts.
pub fn set_sources(set: &StrategySet) -> Vec<(SlotId, String, bool)> {
    set.slots.iter().map(|s| (s.slot, s.source(set.domain), matches!(s.kind, ImplKind::Native))).collect()
}
