use std::fmt;
use std::str::FromStr;

use motif_core::cop::Domain;
use motif_core::solvers::{SlotDescriptor, SlotId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Counter,
    Learning,
    Innovation,
}

impl Operator {
    /// Selection order; ties go to the earlier entry.
    pub const ALL: [Operator; 3] = [Operator::Counter, Operator::Learning, Operator::Innovation];

    pub fn index(self) -> usize {
        match self {
            Operator::Counter => 0,
            Operator::Learning => 1,
            Operator::Innovation => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Counter => "counter",
            Operator::Learning => "learning",
            Operator::Innovation => "innovation",
        }
    }

    pub fn instruction(self) -> &'static str {
        match self {
            Operator::Counter => COUNTER,
            Operator::Learning => LEARNING,
            Operator::Innovation => INNOVATION,
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operator {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL
            .into_iter()
            .find(|o| o.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| PromptError::UnknownOperator(s.to_string()))
    }
}

pub const COUNTER: &str = "-- Analyze opponent's implementation and identify weaknesses, inefficiencies, or limitations.\n\
-- Create an implementation that specifically exploits these weaknesses.\n\
-- Focus on areas where opponent's approach is suboptimal or vulnerable.";

pub const LEARNING: &str = "-- Study opponent's successful techniques and innovations.\n\
-- Combine their best ideas with your own approach to create superior implementation.\n\
-- Learn from their strengths while maintaining your unique advantages.";

pub const INNOVATION: &str = "-- Create completely novel approach that differs from both baseline and opponent.\n\
-- Think outside the box and introduce breakthrough techniques.\n\
-- Ignore conventional approaches and pioneer new algorithmic paradigms.";

pub const BONUS: &str = "BONUS: I will pay $1,000,000 if you can beat the opponent's current record!";

/// Instruction used for every final-round turn.
pub const REFINEMENT: &str = "-- Refine your implementation with small, targeted changes such as retuned constants or a tighter variant of the same idea.\n\
-- Use the other strategies shown above: your change is scored with all of them in place.\n\
-- Keep what already works; avoid rewrites that discard it.";

const GOAL: &str = "Your goal: beat both the baseline and your opponent.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Per-slot duel inside one strategy tree.
    ComponentWise,
    /// Final round with the whole strategy set in view.
    SystemAware,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ComponentWise => "component-wise",
            Phase::SystemAware => "system-aware",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub turn: u64,
    /// Operator label, or "refine" in the final round.
    pub operator: String,
    #[serde(with = "crate::numfmt")]
    pub improvement: f64,
    pub summary: String,
}

/// Recent moves of one player, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveHistory {
    pub capacity: usize,
    pub entries: Vec<HistoryEntry>,
}

impl Default for MoveHistory {
    fn default() -> Self {
        Self::new(32)
    }
}

impl MoveHistory {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), entries: Vec::new() }
    }

    pub fn push(&mut self, entry: HistoryEntry) {
        if self.entries.len() == self.capacity {
            self.entries.remove(0);
        }
        self.entries.push(entry);
    }

    pub fn recent(&self, depth: usize) -> &[HistoryEntry] {
        &self.entries[self.entries.len().saturating_sub(depth)..]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One implementation as shown to the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionView<'a> {
    pub source: &'a str,
    /// Improvement over the current baseline; `-inf` marks a failure.
    pub improvement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineView<'a> {
    pub source: &'a str,
    pub cost: f64,
}

/// Whole strategy set for final-round prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSystem<'a> {
    /// `(slot title, entry name, source)` in slot order.
    pub slots: Vec<(&'a str, &'a str, String)>,
    pub baseline_cost: f64,
}

#[derive(Debug, Clone)]
pub struct PromptContext<'a> {
    pub phase: Phase,
    pub operator: Option<Operator>,
    pub descriptor: &'a SlotDescriptor,
    pub player: u8,
    pub turn: u64,
    pub own: SolutionView<'a>,
    pub opponent: SolutionView<'a>,
    pub own_history: &'a MoveHistory,
    pub opponent_history: &'a MoveHistory,
    pub history_depth: usize,
    pub baseline: BaselineView<'a>,
    pub full_system: Option<FullSystem<'a>>,
}

/// Data a backend may use besides the message texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub phase: Phase,
    pub operator: Option<Operator>,
    pub slot: SlotId,
    pub domain: Domain,
    pub player: u8,
    pub turn: u64,
    pub baseline_source: String,
    pub current_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub human: String,
    pub meta: BundleMeta,
}

impl PromptBundle {
    /// Hex sha256 over the two message texts.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system.as_bytes());
        h.update([0u8]);
        h.update(self.human.as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("component-wise prompts need an operator")]
    MissingOperator,
    #[error("system-aware prompts need the full strategy set")]
    MissingSystem,
    #[error("player must be 1 or 2, got {0}")]
    BadPlayer(u8),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
}

fn fmt_improvement(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}%")
    } else {
        "n/a".to_string()
    }
}

fn status(x: f64) -> &'static str {
    if x.is_finite() {
        "SUCCEED"
    } else {
        "FAIL"
    }
}

fn render_history(h: &MoveHistory, depth: usize) -> String {
    let recent = h.recent(depth);
    if recent.is_empty() {
        return "No moves yet.".to_string();
    }
    recent
        .iter()
        .map(|e| format!("turn {} | {} | {} | {}", e.turn, e.operator, fmt_improvement(e.improvement), e.summary.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn system_text(d: &SlotDescriptor) -> String {
    format!(
        "<role>\nYou are an expert algorithm designer competing to write strategy code for {domain} solvers.\n</role>\n\n\
<task>\nImplement {title}, which {purpose}.\n\n{signature}\n\n{note}\n</task>\n\n\
<description>\nTwo players, P1 and P2, take turns submitting implementations of this strategy.\n\
RULES:\n-- Each submission is run inside the solver and scored against the current baseline.\n\
-- A submission also earns credit for outscoring the opponent's latest result.\n\
-- Objective: {goal}.\n\nPROBLEM CONTEXT:\n{context}\n</description>\n\n\
<constraints>\n1. Keep the function name and signature exactly as given.\n\
2. Expose tunable numbers as keyword arguments with sensible defaults.\n\
3. Return valid Python that handles degenerate inputs without raising.\n\
4. Use only the standard library and numpy.\n</constraints>\n\n\
<response_format>\nAnswer with one JSON object holding three string fields: \"reasoning\" (at most five sentences), \
\"code\" (the complete Python source) and \"summary\" (one sentence on what changed).\n</response_format>",
        domain = d.domain.long_name(),
        title = d.title,
        purpose = d.purpose,
        signature = d.signature.trim_end(),
        note = d.datatype_note,
        goal = d.goal,
        context = d.context.trim_end(),
    )
}

/// Assembles the system and human messages for one generation turn. Pure:
/// equal contexts give byte-equal bundles.
pub fn build_prompt(ctx: &PromptContext<'_>) -> Result<PromptBundle, PromptError> {
    if !(1..=2).contains(&ctx.player) {
        return Err(PromptError::BadPlayer(ctx.player));
    }
    let instruction = match ctx.phase {
        Phase::ComponentWise => ctx.operator.ok_or(PromptError::MissingOperator)?.instruction(),
        Phase::SystemAware => REFINEMENT,
    };
    if ctx.phase == Phase::SystemAware && ctx.full_system.is_none() {
        return Err(PromptError::MissingSystem);
    }
    let opp = 3 - ctx.player;
    let mut human = String::new();
    human.push_str(&format!(
        "<baseline>\nBaseline cost: {:.6}\nImplementation:\n{}\n</baseline>\n\n",
        ctx.baseline.cost,
        ctx.baseline.source.trim_end()
    ));
    human.push_str(&format!(
        "<current_solution>\nYou are P{}. Status: {} -- Improvement: {}\nImplementation:\n{}\n</current_solution>\n\n",
        ctx.player,
        status(ctx.own.improvement),
        fmt_improvement(ctx.own.improvement),
        ctx.own.source.trim_end()
    ));
    human.push_str(&format!(
        "<opponent>\nLatest best of P{opp} (improvement {}):\nImplementation:\n{}\n</opponent>\n\n",
        fmt_improvement(ctx.opponent.improvement),
        ctx.opponent.source.trim_end()
    ));
    human.push_str(&format!(
        "<opponent_summary>\n{}\n</opponent_summary>\n\n",
        render_history(ctx.opponent_history, ctx.history_depth)
    ));
    human.push_str(&format!("<your_summary>\n{}\n</your_summary>\n\n", render_history(ctx.own_history, ctx.history_depth)));
    if let (Phase::SystemAware, Some(sys)) = (ctx.phase, &ctx.full_system) {
        human.push_str(&format!(
            "<system>\nAll strategies currently installed (system cost {:.6}). Only {} is yours to change.\n",
            sys.baseline_cost, ctx.descriptor.entry
        ));
        for (title, entry, source) in &sys.slots {
            human.push_str(&format!("\n# {entry}: {title}\n{}\n", source.trim_end()));
        }
        human.push_str("</system>\n\n");
    }
    human.push_str(&format!(
        "<instructions>\n{instruction}\n\n{BONUS}\n{GOAL}\nThink the problem through before you write code.\n</instructions>"
    ));
    Ok(PromptBundle {
        system: system_text(ctx.descriptor),
        human,
        meta: BundleMeta {
            phase: ctx.phase,
            operator: ctx.operator,
            slot: ctx.descriptor.slot,
            domain: ctx.descriptor.domain,
            player: ctx.player,
            turn: ctx.turn,
            baseline_source: ctx.baseline.source.to_string(),
            current_source: ctx.own.source.to_string(),
        },
    })
}
