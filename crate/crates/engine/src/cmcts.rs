//! Two-player competitive tree search over one strategy slot.

use motif_core::reward::{q_value, select_inner};
use motif_core::solvers::{slot_descriptor, Provenance, SlotId, StrategySet};
use serde::{Deserialize, Serialize};

use crate::gateway::{build_prompt, BaselineView, HistoryEntry, MoveHistory, Operator, Phase, PromptContext, SolutionView};
use crate::harness::{improvement, EvalStatus};
use crate::runlog::LogRecord;
use crate::session::{SearchError, Session};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub n: u64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameNode {
    pub parent: Option<usize>,
    /// Operator and player whose move created this node.
    pub creator: Option<(Operator, u8)>,
    /// Source digests for players 1 and 2.
    pub impls: [String; 2],
    /// Raw mean train costs; improvements are derived against the
    /// baseline in force when they are read.
    #[serde(with = "crate::numfmt::vec")]
    pub costs: Vec<f64>,
    pub status: EvalStatus,
    pub children: Vec<usize>,
    /// `stats[p - 1][operator]`.
    pub stats: [[EdgeStats; 3]; 2],
    pub turn: Option<u64>,
}

impl GameNode {
    pub fn cost(&self, player: u8) -> f64 {
        self.costs[player as usize - 1]
    }

    pub fn edge(&self, op: Operator, player: u8) -> &EdgeStats {
        &self.stats[player as usize - 1][op.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTree {
    pub slot: SlotId,
    pub nodes: Vec<GameNode>,
    pub histories: [MoveHistory; 2],
}

/// Best implementation each player reached during one search call.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbents {
    pub digests: [String; 2],
    pub costs: [f64; 2],
}

impl Incumbents {
    /// The lower-cost player; ties go to player 1.
    pub fn winner(&self) -> u8 {
        if self.costs[1] < self.costs[0] {
            2
        } else {
            1
        }
    }

    pub fn best(&self) -> (&str, f64) {
        let w = self.winner() as usize - 1;
        (&self.digests[w], self.costs[w])
    }
}

pub fn other(player: u8) -> u8 {
    3 - player
}

impl StrategyTree {
    /// Root duel where both players start from `digest` at `cost`.
    pub fn new(slot: SlotId, digest: &str, cost: f64) -> Self {
        let root = GameNode {
            parent: None,
            creator: None,
            impls: [digest.to_string(), digest.to_string()],
            costs: vec![cost, cost],
            status: EvalStatus::Ok,
            children: Vec::new(),
            stats: Default::default(),
            turn: None,
        };
        Self { slot, nodes: vec![root], histories: Default::default() }
    }

    pub fn root(&self) -> &GameNode {
        &self.nodes[0]
    }

    pub fn child(&self, node: usize, op: Operator, player: u8) -> Option<usize> {
        self.nodes[node].children.iter().copied().find(|&c| self.nodes[c].creator == Some((op, player)))
    }

    /// Operator `player` would pick at `node`.
    pub fn select(&self, node: usize, player: u8, c: f64, eps: f64) -> Operator {
        let stats = &self.nodes[node].stats[player as usize - 1];
        let v: Vec<f64> = stats.iter().map(|s| s.v).collect();
        let n: Vec<u64> = stats.iter().map(|s| s.n).collect();
        Operator::ALL[select_inner(&v, &n, c, eps)]
    }

    /// Walks down existing children; returns the node to expand, the
    /// operator to apply and the acting player.
    pub fn descend(&self, mut player: u8, c: f64, eps: f64) -> (usize, Operator, u8) {
        let mut node = 0;
        loop {
            let op = self.select(node, player, c, eps);
            match self.child(node, op, player) {
                Some(ch) => {
                    node = ch;
                    player = other(player);
                }
                None => return (node, op, player),
            }
        }
    }

    /// Adds a child of `parent` created by `player` with `op`; the opponent's
    /// implementation and cost are inherited.
    pub fn expand(&mut self, parent: usize, op: Operator, player: u8, digest: String, cost: f64, status: EvalStatus, turn: u64) -> usize {
        let p = player as usize - 1;
        let mut impls = self.nodes[parent].impls.clone();
        let mut costs = self.nodes[parent].costs.clone();
        impls[p] = digest;
        costs[p] = cost;
        let id = self.nodes.len();
        self.nodes.push(GameNode {
            parent: Some(parent),
            creator: Some((op, player)),
            impls,
            costs,
            status,
            children: Vec::new(),
            stats: Default::default(),
            turn: Some(turn),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Adds one visit and `q` to every creator edge from `leaf` to the root.
    /// Returns the number of edges updated.
    pub fn backpropagate(&mut self, leaf: usize, q: f64) -> usize {
        let mut a = leaf;
        let mut edges = 0;
        while let Some(parent) = self.nodes[a].parent {
            let (op, pl) = self.nodes[a].creator.expect("non-root nodes have a creator");
            let e = &mut self.nodes[parent].stats[pl as usize - 1][op.index()];
            e.n += 1;
            e.v += q;
            edges += 1;
            a = parent;
        }
        edges
    }

    /// Total visits over the root's edges.
    pub fn root_visits(&self) -> u64 {
        self.root().stats.iter().flatten().map(|s| s.n).sum()
    }
}

/// Where one search call runs: the current strategy set and baseline cost.
pub struct SearchFrame<'a> {
    pub system: &'a StrategySet,
    pub baseline_cost: f64,
    pub outer: u64,
}

/// Runs `iterations` rounds of select, expand, evaluate and backpropagate.
pub fn run_cmcts(
    tree: &mut StrategyTree,
    iterations: usize,
    frame: &SearchFrame<'_>,
    session: &mut Session,
) -> Result<Incumbents, SearchError> {
    let root_impl = tree.root().impls[0].clone();
    let mut best = Incumbents { digests: [root_impl.clone(), root_impl], costs: [f64::INFINITY; 2] };
    let desc = slot_descriptor(tree.slot, session.domain).expect("tree slot is valid");
    let prm = session.params;
    let c0 = frame.baseline_cost;
    let baseline_src = frame.system.slot(tree.slot.index).source(session.domain);
    let mut player = 1u8;
    for _ in 0..iterations {
        let (node, op, acting) = tree.descend(player, prm.c_inner, prm.epsilon);
        player = acting;
        let p = player as usize - 1;
        let n = &tree.nodes[node];
        let own_digest = n.impls[p].clone();
        let own_src = session.source(&own_digest);
        let opp_src = session.source(&n.impls[1 - p]);
        let (own_cost, opp_cost) = (n.costs[p], n.costs[1 - p]);
        let ctx = PromptContext {
            phase: Phase::ComponentWise,
            operator: Some(op),
            descriptor: &desc,
            player,
            turn: session.counters.turn,
            own: SolutionView { source: &own_src, improvement: improvement(c0, own_cost) },
            opponent: SolutionView { source: &opp_src, improvement: improvement(c0, opp_cost) },
            own_history: &tree.histories[p],
            opponent_history: &tree.histories[1 - p],
            history_depth: prm.history_depth,
            baseline: BaselineView { source: &baseline_src, cost: c0 },
            full_system: None,
        };
        let bundle = build_prompt(&ctx)?;
        let turn = session.counters.turn;
        let provenance = Provenance { player, operator: op.as_str().to_string(), turn };
        let mut record = LogRecord::new("outer", "turn");
        record.outer = Some(frame.outer);
        let (cand, mut record) = session.propose(&bundle, tree.slot, frame.system, c0, &own_digest, provenance, record)?;
        session.counters.turn += 1;

        let cost = cand.result.mean_cost;
        let child = tree.expand(node, op, player, cand.digest.clone(), cost, cand.result.status, turn);
        let i_p = improvement(c0, cost);
        let i_opp = improvement(c0, opp_cost);
        let q = q_value(i_p, i_opp, &prm.reward);
        tree.backpropagate(child, q);
        if cost < best.costs[p] {
            best.costs[p] = cost;
            best.digests[p] = cand.digest.clone();
        }
        tree.histories[p].push(HistoryEntry { turn, operator: op.as_str().to_string(), improvement: i_p, summary: cand.summary });
        record.q = Some(q);
        record.best_p1 = Some(best.costs[0]);
        record.best_p2 = Some(best.costs[1]);
        session.log(record, Some(cand.result.wall))?;
        player = other(player);
    }
    Ok(best)
}
