mod common;

use motif_core::cop::{DatasetRole, Domain};
use motif_core::solvers::{Framework, SlotId, StrategyImpl, StrategySet};
use motif_engine::cmcts::{run_cmcts, EdgeStats, SearchFrame, StrategyTree};
use motif_engine::gateway::{MockEntry, MockFixture, MockMode, Operator, ScriptedMock};
use motif_engine::harness::EvalStatus;
use motif_engine::session::Session;
use proptest::prelude::*;

use common::{identity, session, ScriptedEvaluator};

const SLOT: SlotId = SlotId { framework: Framework::Dr, index: 1 };

fn edge_src(tag: &str) -> String {
    format!("import numpy as np\n\n\ndef edge_score(i: int, j: int, distances: np.ndarray) -> float:\n    # {tag}\n    return -float(distances[i, j]) * 1.0 + 0.0 * {}\n", tag.len())
}

fn setup(ev: ScriptedEvaluator, backend: Box<dyn motif_engine::gateway::ChatBackend>) -> (Session, StrategyTree, StrategySet) {
    let mut s = session(Framework::Dr, Domain::Tsp, Box::new(ev), backend);
    let root = s.intern(StrategyImpl::native(SLOT));
    let tree = StrategyTree::new(SLOT, &root, 10.0);
    (s, tree, StrategySet::baseline(Framework::Dr, Domain::Tsp).unwrap())
}

fn ordinal(entries: Vec<MockEntry>) -> Box<ScriptedMock> {
    Box::new(ScriptedMock::new(MockFixture { mode: MockMode::Ordinal, strict: true, sequence: entries, ..Default::default() }))
}

#[test]
fn identity_generator_trace() {
    let (mut s, mut tree, system) = setup(ScriptedEvaluator::new(Domain::Tsp, 10.0), identity());
    let root = tree.root().impls[0].clone();
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    let inc = run_cmcts(&mut tree, 10, &frame, &mut s).unwrap();
    assert_eq!(inc.costs, [10.0, 10.0]);
    assert_eq!(inc.digests, [root.clone(), root.clone()]);
    assert_eq!(tree.root_visits(), 10);
    assert_eq!(tree.nodes.len(), 11);
    assert_eq!(s.evaluator.budget().candidates, 10);
    let turns: Vec<_> = s.log.records().iter().filter(|r| r.kind == "turn").collect();
    assert_eq!(turns.len(), 10);
    for (t, r) in turns.iter().enumerate() {
        assert_eq!(r.q, Some(0.5));
        assert_eq!(r.turn, Some(t as u64));
        assert_eq!(r.digest.as_deref(), Some(root.as_str()));
    }
    // every generation is a copy of the baseline, which resolves to the native impl
    assert_eq!(s.pool.entries.len(), 1);
    assert!(s.pool.get(&root).is_native());
}

#[test]
fn zero_iterations_return_the_root() {
    let (mut s, mut tree, system) = setup(ScriptedEvaluator::new(Domain::Tsp, 10.0), identity());
    let before = tree.clone();
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    let inc = run_cmcts(&mut tree, 0, &frame, &mut s).unwrap();
    assert_eq!(inc.best().0, before.root().impls[0]);
    assert_eq!(tree, before);
    assert_eq!(s.log.len(), 0);
    assert_eq!(s.evaluator.budget().candidates, 0);
}

fn stub_tree() -> StrategyTree {
    StrategyTree::new(SLOT, "r", 1.0)
}

fn set_stats(t: &mut StrategyTree, n: [u64; 3], v: [f64; 3]) {
    for i in 0..3 {
        t.nodes[0].stats[0][i] = EdgeStats { n: n[i], v: v[i] };
    }
}

#[test]
fn selection_worked_examples() {
    let mut t = stub_tree();
    assert_eq!(t.select(0, 1, 0.01, 1e-6), Operator::Counter);
    set_stats(&mut t, [1, 1, 0], [0.9, 0.9, 0.0]);
    assert_eq!(t.select(0, 1, 0.01, 1e-6), Operator::Innovation);
    // ln(5) = 1.6094; scores 0.6 + 0.01*sqrt(0.8047), 0.9 + 0.01*sqrt(1.6094), 0.4 + 0.01*sqrt(1.6094)
    set_stats(&mut t, [2, 1, 1], [1.2, 0.9, 0.4]);
    assert_eq!(t.select(0, 1, 0.01, 1e-6), Operator::Learning);
    // with a large exploration constant the score of arm 0 is 0.6 + 10*0.897 = 9.57, arm 1 is 0.9 + 10*1.269 = 13.59
    assert_eq!(t.select(0, 1, 10.0, 1e-6), Operator::Learning);
    set_stats(&mut t, [1, 4, 4], [0.9, 2.0, 2.0]);
    // 0.9 + 0.01*sqrt(ln 10) = 0.9152 beats 0.5 + 0.01*sqrt(ln 10 / 4) = 0.5076
    assert_eq!(t.select(0, 1, 0.01, 1e-6), Operator::Counter);
    // player 2's statistics are separate
    assert_eq!(t.select(0, 2, 0.01, 1e-6), Operator::Counter);
}

#[test]
fn failed_candidate_is_a_sentinel_node() {
    let bad = edge_src("broken");
    let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0).failing(&bad, EvalStatus::RuntimeError);
    let (mut s, mut tree, system) = setup(ev, ordinal(vec![MockEntry::code(bad, "broke it")]));
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    let inc = run_cmcts(&mut tree, 1, &frame, &mut s).unwrap();
    let n = &tree.nodes[1];
    assert_eq!(n.status, EvalStatus::RuntimeError);
    assert_eq!(n.cost(1), f64::INFINITY);
    assert_eq!(n.cost(2), 10.0);
    assert_eq!(tree.root().edge(Operator::Counter, 1), &EdgeStats { n: 1, v: 0.0 });
    assert_eq!(inc.costs, [f64::INFINITY, f64::INFINITY]);
    assert_eq!(inc.best().0, tree.root().impls[0]);
    let r = s.log.records().last().unwrap();
    assert_eq!(r.status.as_deref(), Some("runtime-error"));
    assert_eq!(r.improvement, Some(f64::NEG_INFINITY));
}

#[test]
fn generation_failure_keeps_own_impl() {
    let two = MockEntry::raw(r#"{"reasoning":"r","summary":"s"}"#);
    let (mut s, mut tree, system) = setup(ScriptedEvaluator::new(Domain::Tsp, 10.0), ordinal(vec![two; 4]));
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    run_cmcts(&mut tree, 1, &frame, &mut s).unwrap();
    assert_eq!(tree.nodes[1].status, EvalStatus::GenerationFailure);
    assert_eq!(tree.nodes[1].impls[0], tree.root().impls[0]);
    assert_eq!(s.counters.request, 4);
    assert_eq!(s.evaluator.budget().candidates, 0);
    let r = s.log.records().last().unwrap();
    assert_eq!((r.attempts, r.q), (Some(4), Some(0.0)));
}

#[test]
fn incumbents_are_monotone_and_opponents_inherited() {
    let factors = [0.9, 1.3, 0.8, 0.95, 1.1, 0.7, 1.0, 0.85];
    let mut ev = ScriptedEvaluator::new(Domain::Tsp, 10.0);
    let mut seq = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        let src = edge_src(&format!("move{i}"));
        ev = ev.factor(&src, *f);
        seq.push(MockEntry::code(src, format!("move {i}")));
    }
    let (mut s, mut tree, system) = setup(ev, ordinal(seq));
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    let inc = run_cmcts(&mut tree, factors.len(), &frame, &mut s).unwrap();

    let turns: Vec<_> = s.log.records().iter().filter(|r| r.kind == "turn").collect();
    for w in turns.windows(2) {
        assert!(w[1].best_p1.unwrap() <= w[0].best_p1.unwrap());
        assert!(w[1].best_p2.unwrap() <= w[0].best_p2.unwrap());
    }
    // oracle: best cost per acting player from the log
    let mut want = [f64::INFINITY; 2];
    for r in &turns {
        let p = r.player.unwrap() as usize - 1;
        want[p] = want[p].min(r.mean_cost.unwrap());
    }
    assert_eq!(inc.costs, want);
    for (id, n) in tree.nodes.iter().enumerate().skip(1) {
        let parent = &tree.nodes[n.parent.unwrap()];
        let (_, pl) = n.creator.unwrap();
        let o = 2 - pl as usize;
        assert_eq!(n.impls[o], parent.impls[o], "node {id}");
        assert_eq!(n.costs[o], parent.costs[o], "node {id}");
        // Q from the node's own costs: 0.7 sigmoid(I_p) + 0.3 sigmoid(I_p - I_opp)
        let sig = |x: f64| 1.0 / (1.0 + (-10.0 * x).exp());
        let ip = (10.0 - n.cost(pl)) / 10.0 * 100.0;
        let io = (10.0 - n.costs[o]) / 10.0 * 100.0;
        let q = 0.7 * sig(ip) + 0.3 * sig(ip - io);
        let logged = turns.iter().find(|r| r.turn == n.turn).unwrap().q.unwrap();
        assert!((logged - q).abs() < 1e-12);
    }
    assert_eq!(tree.root_visits(), factors.len() as u64);
    assert!(s.evaluator.budget().used == 5 * factors.len() as u64);
}

#[test]
fn warm_tree_continues_where_it_stopped() {
    let (mut s, mut tree, system) = setup(ScriptedEvaluator::new(Domain::Tsp, 10.0), identity());
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    run_cmcts(&mut tree, 3, &frame, &mut s).unwrap();
    run_cmcts(&mut tree, 4, &frame, &mut s).unwrap();
    assert_eq!(tree.root_visits(), 7);
    assert_eq!(tree.nodes.len(), 8);
    assert_eq!(s.counters.turn, 7);
}

#[test]
fn train_set_only_during_search() {
    let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0);
    let (mut s, mut tree, system) = setup(ev, identity());
    let frame = SearchFrame { system: &system, baseline_cost: 10.0, outer: 0 };
    run_cmcts(&mut tree, 5, &frame, &mut s).unwrap();
    assert!(s.log.records().iter().all(|r| r.dataset.as_deref() != Some(DatasetRole::Test.as_str())));
}

proptest! {
    #[test]
    fn backprop_visit_conservation(shape in prop::collection::vec((0usize..64, 0usize..3, 0.0f64..1.0), 1..60)) {
        let mut t = stub_tree();
        let mut leaves = Vec::new();
        let mut qsum = 0.0;
        for (pick, op, q) in shape {
            let parent = pick % t.nodes.len();
            let player = if t.nodes[parent].creator.map_or(1, |(_, p)| p) == 1 && parent != 0 { 2 } else { 1 };
            let op = Operator::ALL[op];
            let id = match t.child(parent, op, player) {
                Some(c) => c,
                None => t.expand(parent, op, player, format!("n{}", t.nodes.len()), 1.0, EvalStatus::Ok, 0),
            };
            let depth = {
                let (mut a, mut d) = (id, 0);
                while let Some(p) = t.nodes[a].parent { a = p; d += 1; }
                d
            };
            prop_assert_eq!(t.backpropagate(id, q), depth);
            leaves.push(id);
            qsum += q;
        }
        prop_assert_eq!(t.root_visits(), leaves.len() as u64);
        let root_v: f64 = t.root().stats.iter().flatten().map(|s| s.v).sum();
        prop_assert!((root_v - qsum).abs() < 1e-9);
        for a in 1..t.nodes.len() {
            let through = leaves.iter().filter(|&&l| {
                let mut x = Some(l);
                while let Some(y) = x { if y == a { return true; } x = t.nodes[y].parent; }
                false
            }).count() as u64;
            let (op, pl) = t.nodes[a].creator.unwrap();
            let parent = t.nodes[a].parent.unwrap();
            prop_assert_eq!(t.nodes[parent].edge(op, pl).n, through);
            // a node's in-edge is never smaller than the sum of its children's
            let below: u64 = t.nodes[a].children.iter().map(|&c| {
                let (o, p) = t.nodes[c].creator.unwrap();
                t.nodes[a].edge(o, p).n
            }).sum();
            prop_assert!(below <= through);
        }
    }
}
