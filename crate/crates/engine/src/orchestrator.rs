//! Phase control: the outer bandit over strategy trees with a moving
//! baseline, then the system-aware final round.

use motif_core::cop::DatasetRole;
use motif_core::reward::{select_outer, sigmoid};
use motif_core::solvers::{slot_descriptor, Provenance, SlotId, StrategySet};
use serde::{Deserialize, Serialize};

use crate::cmcts::{other, run_cmcts, SearchFrame, StrategyTree};
use crate::gateway::{build_prompt, BaselineView, FullSystem, HistoryEntry, MoveHistory, Phase, PromptContext, SolutionView};
use crate::harness::{improvement, EvalStatus};
use crate::runlog::LogRecord;
use crate::session::{SearchError, Session};

/// Increment for an outer step that found no improvement.
pub const NO_IMPROVEMENT_REWARD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineUpdate {
    pub outer: u64,
    pub slot: usize,
    pub cost: f64,
    pub system: StrategySet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterState {
    /// Searchable slot index of each tree.
    pub slots: Vec<usize>,
    pub rewards: Vec<f64>,
    pub visits: Vec<u64>,
    pub system: StrategySet,
    pub baseline_cost: f64,
    /// Completed outer iterations.
    pub iteration: u64,
    /// Every strategy set that set a new baseline, oldest first.
    pub updates: Vec<BaselineUpdate>,
}

impl OuterState {
    pub fn new(system: StrategySet, baseline_cost: f64, slots: Vec<usize>) -> Self {
        let k = slots.len();
        Self { slots, rewards: vec![0.0; k], visits: vec![0; k], system, baseline_cost, iteration: 0, updates: Vec::new() }
    }

    pub fn select_tree(&self, c: f64) -> usize {
        select_outer(&self.rewards, &self.visits, c)
    }
}

/// One tree per searchable slot, rooted at the slot's implementation in
/// `system` with cost `cost`.
pub fn init_trees(system: &StrategySet, cost: f64, slots: &[usize], session: &mut Session) -> Vec<StrategyTree> {
    slots
        .iter()
        .map(|&k| {
            let imp = system.slot(k).clone();
            let d = session.intern(imp);
            StrategyTree::new(SlotId::new(system.framework, k), &d, cost)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep {
    pub tree: usize,
    pub improved: bool,
    pub reward: f64,
    pub cost: f64,
}

/// Select a tree, search it, install its best implementation, and keep the
/// result only if the whole system got cheaper.
pub fn outer_iteration(
    state: &mut OuterState,
    trees: &mut [StrategyTree],
    session: &mut Session,
) -> Result<OuterStep, SearchError> {
    let prm = session.params;
    let k = state.select_tree(prm.c_outer);
    let frame = SearchFrame { system: &state.system, baseline_cost: state.baseline_cost, outer: state.iteration };
    let inc = run_cmcts(&mut trees[k], prm.t_inner, &frame, session)?;
    let (digest, _) = inc.best();
    let winner = session.pool.get(digest).clone();
    let candidate = state.system.with_slot(winner.clone());
    let mut rec = LogRecord::new("outer", "system");
    rec.outer = Some(state.iteration);
    rec.slot = Some(trees[k].slot.to_string());
    rec.digest = Some(digest.to_string());
    let r = session.evaluator.evaluate(&candidate, DatasetRole::Train, Some(state.baseline_cost));
    if r.status == EvalStatus::BudgetExhausted {
        return Err(SearchError::BudgetExhausted);
    }
    let improved = r.status.is_ok() && r.mean_cost < state.baseline_cost;
    let reward = if improved { sigmoid(r.improvement, prm.reward.k) } else { NO_IMPROVEMENT_REWARD };
    state.rewards[k] += reward;
    state.visits[k] += 1;

    rec.status = Some(r.status.as_str().to_string());
    rec.dataset = Some(DatasetRole::Train.as_str().to_string());
    rec.mean_cost = Some(r.mean_cost);
    rec.improvement = Some(r.improvement);
    rec.cached = Some(r.cached);
    rec.reward = Some(reward);
    rec.best_p1 = Some(inc.costs[0]);
    rec.best_p2 = Some(inc.costs[1]);
    rec.operator = Some(winner.provenance.as_ref().map_or("none".to_string(), |p| p.operator.clone()));
    if improved {
        state.system = candidate;
        state.baseline_cost = r.mean_cost;
        state.updates.push(BaselineUpdate {
            outer: state.iteration,
            slot: state.slots[k],
            cost: r.mean_cost,
            system: state.system.clone(),
        });
    }
    rec.baseline_cost = Some(state.baseline_cost);
    rec.detail = Some(serde_json::json!({ "tree": k, "improved": improved }));
    session.log(rec, Some(r.wall))?;
    state.iteration += 1;
    Ok(OuterStep { tree: k, improved, reward, cost: r.mean_cost })
}

/// Resumable state of the final round; one `final_turn` call advances it
/// by one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRoundState {
    pub slots: Vec<usize>,
    /// Position in `slots`; equal to `slots.len()` when done.
    pub position: usize,
    pub turn: usize,
    pub player: u8,
    pub failures: u32,
    /// Global best, updated when a slot's winner is installed.
    pub system: StrategySet,
    pub cost: f64,
    /// Frozen for the slot in progress.
    pub base_system: StrategySet,
    pub base_cost: f64,
    pub best_digests: [String; 2],
    #[serde(with = "crate::numfmt::vec")]
    pub best_costs: Vec<f64>,
    pub histories: [MoveHistory; 2],
    /// Set when the budget ran out; remaining slots are skipped.
    pub halted: bool,
}

impl FinalRoundState {
    pub fn new(system: StrategySet, cost: f64, slots: Vec<usize>, session: &mut Session) -> Self {
        let mut s = Self {
            slots,
            position: 0,
            turn: 0,
            player: 1,
            failures: 0,
            base_system: system.clone(),
            base_cost: cost,
            system,
            cost,
            best_digests: [String::new(), String::new()],
            best_costs: vec![f64::INFINITY; 2],
            histories: Default::default(),
            halted: false,
        };
        s.start_slot(session);
        s
    }

    pub fn is_done(&self) -> bool {
        self.halted || self.position >= self.slots.len()
    }

    pub fn current_slot(&self) -> Option<usize> {
        self.slots.get(self.position).copied()
    }

    fn start_slot(&mut self, session: &mut Session) {
        self.turn = 0;
        self.player = 1;
        self.failures = 0;
        self.base_system = self.system.clone();
        self.base_cost = self.cost;
        self.best_costs = vec![f64::INFINITY; 2];
        self.histories = Default::default();
        if let Some(k) = self.current_slot() {
            let d = session.intern(self.base_system.slot(k).clone());
            self.best_digests = [d.clone(), d];
        }
    }

    fn finish_slot(&mut self, session: &mut Session) -> Result<(), SearchError> {
        let k = self.current_slot().expect("slot in progress");
        let w = if self.best_costs[1] < self.best_costs[0] { 1 } else { 0 };
        let (cw, co) = (self.best_costs[w], self.best_costs[1 - w]);
        let install = cw < self.cost && cw < co;
        let mut rec = LogRecord::new("final", "install");
        rec.slot = Some(SlotId::new(self.system.framework, k).to_string());
        rec.player = Some(w as u8 + 1);
        rec.mean_cost = Some(cw);
        rec.best_p1 = Some(self.best_costs[0]);
        rec.best_p2 = Some(self.best_costs[1]);
        rec.digest = Some(self.best_digests[w].clone());
        if install {
            self.system = self.base_system.with_slot(session.pool.get(&self.best_digests[w]).clone());
            self.cost = cw;
        }
        rec.baseline_cost = Some(self.cost);
        rec.detail = Some(serde_json::json!({ "installed": install }));
        session.log(rec, None)?;
        self.position += 1;
        self.start_slot(session);
        Ok(())
    }
}

/// One final-round turn. Returns `false` once every slot is finished.
pub fn final_turn(state: &mut FinalRoundState, session: &mut Session) -> Result<bool, SearchError> {
    let prm = session.params;
    if state.is_done() {
        return Ok(false);
    }
    if state.turn >= prm.t_final {
        state.finish_slot(session)?;
        return Ok(!state.is_done());
    }
    let k = state.current_slot().expect("slot in progress");
    let slot = SlotId::new(state.system.framework, k);
    let desc = slot_descriptor(slot, session.domain).expect("valid slot");
    let p = state.player as usize - 1;
    let base_digest = session.intern(state.base_system.slot(k).clone());
    let fallback = state.failures >= prm.fallback_after;
    if fallback {
        state.failures = 0;
    }
    let (start, start_cost) = if fallback || state.best_costs[p].is_infinite() {
        (base_digest.clone(), state.base_cost)
    } else {
        (state.best_digests[p].clone(), state.best_costs[p])
    };
    let (opp, opp_cost) = if state.best_costs[1 - p].is_finite() {
        (state.best_digests[1 - p].clone(), state.best_costs[1 - p])
    } else {
        (base_digest.clone(), state.base_cost)
    };
    let working = state.base_system.with_slot(session.pool.get(&start).clone());
    let all_descs = motif_core::solvers::slot_descriptors(working.framework, working.domain).expect("valid framework");
    let sys = FullSystem {
        slots: working
            .slots
            .iter()
            .zip(&all_descs)
            .map(|(imp, d)| (d.title, d.entry, imp.source(working.domain)))
            .collect(),
        baseline_cost: state.base_cost,
    };
    let own_src = session.source(&start);
    let opp_src = session.source(&opp);
    let base_src = session.source(&base_digest);
    let ctx = PromptContext {
        phase: Phase::SystemAware,
        operator: None,
        descriptor: &desc,
        player: state.player,
        turn: session.counters.turn,
        own: SolutionView { source: &own_src, improvement: improvement(state.base_cost, start_cost) },
        opponent: SolutionView { source: &opp_src, improvement: improvement(state.base_cost, opp_cost) },
        own_history: &state.histories[p],
        opponent_history: &state.histories[1 - p],
        history_depth: prm.history_depth,
        baseline: BaselineView { source: &base_src, cost: state.base_cost },
        full_system: Some(sys),
    };
    let bundle = build_prompt(&ctx)?;
    let turn = session.counters.turn;
    let provenance = Provenance { player: state.player, operator: "refine".into(), turn };
    let mut record = LogRecord::new("final", "turn");
    record.start_digest = Some(start.clone());
    record.fallback = Some(fallback);
    let out = session.propose(&bundle, slot, &working, state.base_cost, &start, provenance, record);
    let (cand, mut record) = match out {
        Err(SearchError::BudgetExhausted) => {
            state.halted = true;
            let mut r = LogRecord::new("final", "notice");
            r.message = Some("evaluation budget exhausted; remaining slots skipped".into());
            session.log(r, None)?;
            return Ok(false);
        }
        other => other?,
    };
    session.counters.turn += 1;
    let c = cand.result.mean_cost;
    let i = cand.result.improvement;
    if c < state.best_costs[p] {
        state.best_costs[p] = c;
        state.best_digests[p] = cand.digest.clone();
    }
    if c.is_finite() && i > prm.failure_floor {
        state.failures = 0;
    } else {
        state.failures += 1;
    }
    state.histories[p].push(HistoryEntry { turn, operator: "refine".into(), improvement: i, summary: cand.summary });
    record.best_p1 = Some(state.best_costs[0]);
    record.best_p2 = Some(state.best_costs[1]);
    record.detail = Some(serde_json::json!({ "failures": state.failures }));
    session.log(record, Some(cand.result.wall))?;
    state.player = other(state.player);
    state.turn += 1;
    if state.turn >= prm.t_final {
        state.finish_slot(session)?;
    }
    Ok(!state.is_done())
}

/// Runs every remaining final-round turn.
pub fn final_round(state: &mut FinalRoundState, session: &mut Session) -> Result<(), SearchError> {
    while final_turn(state, session)? {}
    Ok(())
}
