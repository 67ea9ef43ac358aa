//! Solver frameworks with pluggable strategy slots.
//!
//! A framework fixes the control flow; each slot is a pure callback
//! (`StrategyImpl`) served by a [`StrategyExecutor`]. All sampling happens
//! here, never inside a strategy.

mod aco;
mod baselines;
mod dr;
mod executor;
mod gls;
mod local_search;
mod native;
mod slots;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cop::{CopError, Domain, Instance, Solution};
use crate::Scalar;

pub use aco::{run_aco, AcoObserver, AcoOutcome};
pub use baselines::{baseline_source, native_baseline, normalize_source};
pub use dr::{destroy_count, run_dr, DrOutcome};
pub use executor::{DrView, NativeExecutor, SlotCall, SlotOutput, StrategyError, StrategyExecutor};
pub use gls::{nearest_neighbor_tour, penalty_scale, run_gls, GlsOutcome};
pub use local_search::{best_two_opt_delta, local_search, local_search_around};
pub use native::native_call;
pub use slots::{slot_descriptor, slot_descriptors, CallMode, SlotDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    Gls,
    Aco,
    Dr,
}

impl Framework {
    pub const ALL: [Framework; 3] = [Framework::Gls, Framework::Aco, Framework::Dr];

    pub fn as_str(self) -> &'static str {
        match self {
            Framework::Gls => "gls",
            Framework::Aco => "aco",
            Framework::Dr => "dr",
        }
    }

    pub fn slot_count(self) -> usize {
        match self {
            Framework::Gls => 1,
            Framework::Aco | Framework::Dr => 3,
        }
    }

    pub fn supports(self, domain: Domain) -> bool {
        match self {
            Framework::Gls => domain == Domain::Tsp,
            Framework::Aco => true,
            Framework::Dr => matches!(domain, Domain::Tsp | Domain::Cvrp | Domain::Bpp),
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Framework {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gls" => Ok(Framework::Gls),
            "aco" => Ok(Framework::Aco),
            "dr" => Ok(Framework::Dr),
            other => Err(SolverError::UnknownFramework(other.to_string())),
        }
    }
}

/// A strategy slot: framework plus 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotId {
    pub framework: Framework,
    pub index: usize,
}

impl SlotId {
    pub fn new(framework: Framework, index: usize) -> Self {
        Self { framework, index }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.framework, self.index)
    }
}

/// Who produced an implementation and how.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub player: u8,
    pub operator: String,
    pub turn: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImplKind {
    /// The built-in reference strategy for the slot.
    Native,
    /// Python source served by an executor.
    External { source: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyImpl {
    pub slot: SlotId,
    #[serde(flatten)]
    pub kind: ImplKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl StrategyImpl {
    pub fn native(slot: SlotId) -> Self {
        Self { slot, kind: ImplKind::Native, provenance: None }
    }

    pub fn external(slot: SlotId, source: impl Into<String>) -> Self {
        Self { slot, kind: ImplKind::External { source: source.into() }, provenance: None }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn is_native(&self) -> bool {
        matches!(self.kind, ImplKind::Native)
    }

    /// Source text shown to a generator. Native implementations render as
    /// their Python transliteration.
    pub fn source(&self, domain: Domain) -> String {
        match &self.kind {
            ImplKind::External { source } => source.clone(),
            ImplKind::Native => baseline_source(self.slot, domain).unwrap_or_default().to_string(),
        }
    }
}

/// One implementation per slot of a framework, ordered by slot index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySet {
    pub framework: Framework,
    pub domain: Domain,
    pub slots: Vec<StrategyImpl>,
}

impl StrategySet {
    /// Every slot filled with its native baseline.
    pub fn baseline(framework: Framework, domain: Domain) -> Result<Self, SolverError> {
        if !framework.supports(domain) {
            return Err(SolverError::Unsupported { framework, domain });
        }
        let slots = (1..=framework.slot_count()).map(|k| StrategyImpl::native(SlotId::new(framework, k))).collect();
        Ok(Self { framework, domain, slots })
    }

    pub fn slot(&self, index: usize) -> &StrategyImpl {
        &self.slots[index - 1]
    }

    /// Copy of this set with slot `imp.slot.index` replaced.
    pub fn with_slot(&self, imp: StrategyImpl) -> Self {
        let mut next = self.clone();
        let i = imp.slot.index - 1;
        next.slots[i] = imp;
        next
    }

    /// Slots that search may change.
    pub fn searchable(&self) -> Vec<usize> {
        slot_descriptors(self.framework, self.domain)
            .map(|ds| ds.into_iter().filter(|d| d.searchable).map(|d| d.slot.index).collect())
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.framework.supports(self.domain) {
            return Err(SolverError::Unsupported { framework: self.framework, domain: self.domain });
        }
        if self.slots.len() != self.framework.slot_count() {
            return Err(SolverError::SlotCount { expected: self.framework.slot_count(), got: self.slots.len() });
        }
        for (i, s) in self.slots.iter().enumerate() {
            if s.slot != SlotId::new(self.framework, i + 1) {
                return Err(SolverError::SlotOrder(i + 1));
            }
        }
        Ok(())
    }
}

/// Per-framework knobs plus the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub gls_moves: usize,
    pub gls_iterations: usize,
    pub aco_ants: usize,
    pub aco_iterations: usize,
    /// Fraction of elements removed by DR deconstruction, in `[0, 1)`.
    pub dr_rate: f64,
    pub seed: u64,
}

impl SolverParams {
    pub fn defaults_for(domain: Domain) -> Self {
        let (ants, iters) = match domain {
            Domain::Tsp => (50, 50),
            Domain::Cvrp => (30, 100),
            Domain::Mkp => (10, 50),
            Domain::Op => (20, 100),
            Domain::Bpp => (20, 50),
        };
        Self { gls_moves: 50, gls_iterations: 2000, aco_ants: ants, aco_iterations: iters, dr_rate: 0.2, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("unknown framework tag `{0}`")]
    UnknownFramework(String),
    #[error("framework {framework} does not support domain {domain}")]
    Unsupported { framework: Framework, domain: Domain },
    #[error("framework {0} has no slot {1}")]
    NoSuchSlot(Framework, usize),
    #[error("strategy set has {got} slots, expected {expected}")]
    SlotCount { expected: usize, got: usize },
    #[error("slot at position {0} is out of order")]
    SlotOrder(usize),
    #[error("ant colony needs at least one ant and one iteration")]
    EmptyColony,
    #[error("destruction rate {0} is outside [0, 1)")]
    BadRate(f64),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Cop(#[from] CopError),
}

/// Solution and cost of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<S> {
    pub solution: Solution,
    pub cost: S,
}

/// Runs the set's framework once on `instance`.
pub fn solve<S: Scalar>(
    set: &StrategySet,
    instance: &Instance<S>,
    params: &SolverParams,
    exec: &mut dyn StrategyExecutor<S>,
) -> Result<SolveOutcome<S>, SolverError> {
    set.validate()?;
    if instance.domain() != set.domain {
        return Err(SolverError::Unsupported { framework: set.framework, domain: instance.domain() });
    }
    match set.framework {
        Framework::Gls => {
            let out = run_gls(instance, set.slot(1), params, exec)?;
            Ok(SolveOutcome { solution: Solution::Tour(out.tour), cost: out.cost })
        }
        Framework::Aco => {
            let out = run_aco(instance, [set.slot(1), set.slot(2), set.slot(3)], params, exec, None)?;
            Ok(SolveOutcome { solution: out.solution, cost: out.cost })
        }
        Framework::Dr => {
            let out = run_dr(instance, [set.slot(1), set.slot(2), set.slot(3)], params, exec)?;
            Ok(SolveOutcome { solution: out.solution, cost: out.cost })
        }
    }
}
