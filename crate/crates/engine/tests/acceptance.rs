//! One PASS/FAIL line per acceptance criterion. Everything runs on the
//! in-process executor, so no runner process is needed.

mod common;
#[allow(dead_code)]
#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use motif_core::analytics::{cosine_distance, mean_distance, novelty, operator_report, silhouette, CandidateRecord};
use motif_core::cop::{generate_instance, Domain, InstanceData, Solution};
use motif_core::reward::{q_value, sigmoid};
use motif_core::rng::mix64;
use motif_core::solvers::{
    best_two_opt_delta, local_search, native_baseline, run_aco, run_dr, run_gls, solve, Framework, NativeExecutor, SolverParams,
    StrategySet,
};
use motif_core::{Instance, RewardParams};
use motif_engine::config::ExperimentConfig;
use motif_engine::experiment::{run, RunOptions};
use motif_engine::gateway::{MockEntry, MockFixture, MockMode, ScriptedMock};
use motif_engine::harness::EvalStatus;
use motif_engine::orchestrator::{final_round, FinalRoundState};
use motif_engine::runlog::{read_log, LogRecord};
use motif_engine::session::SearchParams;

use common::ScriptedEvaluator;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Uniform in [0, 1) from a counter.
fn unit(seed: u64, i: u64) -> f64 {
    (mix64(seed ^ mix64(i)) >> 11) as f64 / (1u64 << 53) as f64
}

fn sigmoid_anchor() -> Result<(), String> {
    let s = sigmoid(0.05f64, 10.0);
    ensure!((s - 0.62).abs() <= 0.005, "sigmoid(0.05, k=10) = {s}");
    Ok(())
}

fn q_value_suite() -> Result<(), String> {
    let p = RewardParams::default();
    ensure!(q_value(0.0, 0.0, &p) == 0.5, "Q(0,0) = {}", q_value(0.0, 0.0, &p));
    let grid: Vec<f64> = (0..100).map(|i| -0.5 + i as f64 / 99.0).collect();
    for &o in &grid {
        for w in grid.windows(2) {
            ensure!(q_value(w[1], o, &p) >= q_value(w[0], o, &p), "Q not monotone in I_p at {w:?}, {o}");
            ensure!(q_value(o, w[1], &p) <= q_value(o, w[0], &p), "Q not anti-monotone in I_opp at {o}, {w:?}");
        }
    }
    let sig = |x: f64, k: f64| 1.0 / (1.0 + (-k * x).exp());
    for i in 0..1000u64 {
        let lambda = unit(1, i);
        let k = 1.0 + 19.0 * unit(2, i);
        let ip = 20.0 * unit(3, i) - 10.0;
        let io = 20.0 * unit(4, i) - 10.0;
        let prm = RewardParams { lambda, k };
        let f = lambda * sig(ip, k);
        let g = (1.0 - lambda) * sig(ip - io, k);
        let q = q_value(ip, io, &prm);
        ensure!((q - (f + g)).abs() <= 1e-12, "state {i}: Q={q}, F+G={}", f + g);
    }
    Ok(())
}

fn brute_force_equivalence() -> Result<(), String> {
    let tsp = |n, seed| -> Instance { generate_instance(Domain::Tsp, n, seed).unwrap() };
    let gls = StrategySet::baseline(Framework::Gls, Domain::Tsp).unwrap();
    let aco = StrategySet::baseline(Framework::Aco, Domain::Tsp).unwrap();
    let gp = SolverParams { gls_iterations: 100, ..SolverParams::defaults_for(Domain::Tsp) };
    let ap = SolverParams::defaults_for(Domain::Tsp).with_seed(7);
    let mut aco_hits = 0;
    for seed in 0..20 {
        let inst = tsp(7, 100 + seed);
        let (opt, _) = oracle::tsp_optimum(inst.coords().unwrap());
        let g = solve(&gls, &inst, &gp, &mut NativeExecutor).map_err(|e| e.to_string())?;
        ensure!((g.cost - opt).abs() < 1e-9, "gls seed {seed}: {} vs {opt}", g.cost);
        let a = solve(&aco, &inst, &ap, &mut NativeExecutor).map_err(|e| e.to_string())?;
        ensure!(a.cost >= opt - 1e-9, "aco beat the optimum");
        aco_hits += ((a.cost - opt).abs() < 1e-9) as usize;
    }
    ensure!(aco_hits >= 18, "aco reached the optimum on {aco_hits}/20");

    for seed in 0..3 {
        let inst: Instance = generate_instance(Domain::Cvrp, 6, seed).unwrap();
        let (opt, routes) = oracle::cvrp_optimum(&inst);
        let c = inst.evaluate_solution(&Solution::Routes(routes)).map_err(|e| e.to_string())?;
        ensure!((c - opt).abs() < 1e-12, "cvrp {seed}");

        let inst: Instance = generate_instance(Domain::Bpp, 12, seed).unwrap();
        let InstanceData::Bpp { sizes, capacity } = &inst.data else { unreachable!() };
        let (opt, labels) = oracle::bpp_optimum(sizes, *capacity);
        ensure!(inst.evaluate_solution(&Solution::Bins(labels)).map_err(|e| e.to_string())? == opt as f64, "bpp {seed}");

        let inst: Instance = generate_instance(Domain::Mkp, 10, seed).unwrap();
        let InstanceData::Mkp { prizes, weights, capacities } = &inst.data else { unreachable!() };
        let (opt, assign) = oracle::mkp_optimum(prizes, &weights.to_rows(), capacities);
        ensure!((inst.evaluate_solution(&Solution::Assignment(assign)).map_err(|e| e.to_string())? + opt).abs() < 1e-12, "mkp {seed}");

        let mut inst: Instance = generate_instance(Domain::Op, 8, seed).unwrap();
        if let InstanceData::Op { budget, .. } = &mut inst.data {
            *budget = 1.5;
        }
        let InstanceData::Op { coords, prizes, budget, .. } = &inst.data else { unreachable!() };
        let (opt, path) = oracle::op_optimum(coords, prizes, *budget);
        ensure!((inst.evaluate_solution(&Solution::Path(path)).map_err(|e| e.to_string())? + opt).abs() < 1e-12, "op {seed}");
    }
    Ok(())
}

fn solver_properties() -> Result<(), String> {
    let guide = native_baseline(Framework::Gls, 1, Domain::Tsp).unwrap();
    let aco = StrategySet::baseline(Framework::Aco, Domain::Tsp).unwrap();
    let params = SolverParams { gls_iterations: 50, aco_iterations: 20, ..SolverParams::defaults_for(Domain::Tsp) };
    for seed in 0..5 {
        let inst: Instance = generate_instance(Domain::Tsp, 25, seed).unwrap();
        let h = run_gls(&inst, &guide, &params, &mut NativeExecutor).map_err(|e| e.to_string())?.history;
        ensure!(h.windows(2).all(|w| w[1] <= w[0]), "gls history rises on seed {seed}");
        let h = run_aco(&inst, [aco.slot(1), aco.slot(2), aco.slot(3)], &params, &mut NativeExecutor, None)
            .map_err(|e| e.to_string())?
            .history;
        ensure!(h.windows(2).all(|w| w[1] <= w[0]), "aco history rises on seed {seed}");
    }
    for d in [Domain::Tsp, Domain::Cvrp, Domain::Bpp] {
        let set = StrategySet::baseline(Framework::Dr, d).unwrap();
        for seed in 0..100 {
            let inst: Instance = generate_instance(d, 20, seed).unwrap();
            let out = run_dr(&inst, [set.slot(1), set.slot(2), set.slot(3)], &SolverParams::defaults_for(d), &mut NativeExecutor)
                .map_err(|e| e.to_string())?;
            ensure!(out.cost <= out.greedy_cost, "dr {d} seed {seed}: {} > {}", out.cost, out.greedy_cost);
        }
    }
    for seed in 0..40u64 {
        let n = 4 + (seed as usize * 7) % 47;
        let inst: Instance = generate_instance(Domain::Tsp, n, 500 + seed).unwrap();
        let d = inst.distances().unwrap();
        let dist = |i: usize, j: usize| d[(i, j)];
        let mut t: Vec<usize> = (0..n).collect();
        local_search(&dist, &mut t);
        if let Some((delta, _, _)) = best_two_opt_delta(&dist, &t) {
            ensure!(delta >= -1e-9, "improving 2-opt move left at n={n}");
        }
        // independent check over every segment reversal
        let len = |t: &[usize]| (0..n).map(|k| dist(t[k], t[(k + 1) % n])).sum::<f64>();
        let base = len(&t);
        for i in 0..n {
            for j in i + 2..n {
                let mut u = t.clone();
                u[i + 1..=j].reverse();
                ensure!(len(&u) >= base - 1e-9, "reversal {i}..{j} improves n={n}");
            }
        }
    }
    Ok(())
}

fn small(extra: &[&str]) -> ExperimentConfig {
    common::small_config().with_overrides(&extra.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
}

fn records(dir: &Path) -> Vec<LogRecord> {
    read_log(&dir.join("logs/run.jsonl")).unwrap()
}

fn system_records(rs: &[LogRecord]) -> Vec<&LogRecord> {
    rs.iter().filter(|r| r.phase == "outer" && r.kind == "system").collect()
}

fn outer_trace() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let st = run(&small(&["t_outer=20", "t_inner=10", "t_final=2"]), &out, RunOptions::default()).map_err(|e| e.to_string())?;
    let s = st.snapshot();
    let rs = records(&out);
    let sys = system_records(&rs);
    ensure!(sys.len() == 20, "{} outer iterations", sys.len());
    ensure!(sys.iter().all(|r| r.baseline_cost == Some(s.initial_cost)), "C0 moved");
    ensure!(sys.iter().all(|r| r.reward == Some(0.5)), "a reward other than 0.5");
    ensure!(s.outer.rewards.iter().zip(&s.outer.visits).all(|(r, &n)| *r == 0.5 * n as f64), "reward sums");
    ensure!(s.outer.visits.iter().sum::<u64>() == 20, "visits {:?}", s.outer.visits);
    let first: Vec<u64> = sys.iter().take(3).map(|r| r.detail.as_ref().unwrap()["tree"].as_u64().unwrap()).collect();
    ensure!(first == [0, 1, 2], "first selections {first:?}");
    ensure!(s.outer.system == s.initial_system, "system changed");
    Ok(())
}

/// Slots 2 and 3 searchable; the first generation of outer iteration 3
/// (which returns to slot 2 on the tie) is `src`, scaled by `factor`.
fn scripted_run(src: &str, factor: f64) -> Result<(tempfile::TempDir, motif_engine::experiment::Snapshot), String> {
    let t_in = 2;
    let mut seq = vec![MockEntry { current: true, ..Default::default() }; 2 * t_in];
    seq.push(MockEntry::code(src, "scripted"));
    let fixture = MockFixture { mode: MockMode::Ordinal, strict: false, sequence: seq, ..Default::default() };
    let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0).factor(src, factor);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let opts = RunOptions { evaluator: Some(Box::new(ev)), backend: Some(Box::new(ScriptedMock::new(fixture))), ..Default::default() };
    let st = run(&small(&["t_outer=5", "t_inner=2", "t_final=0", "slots=[2, 3]"]), &out, opts).map_err(|e| e.to_string())?;
    Ok((dir, st.snapshot().clone()))
}

fn dynamic_baseline_and_revert() -> Result<(), String> {
    let src = "import numpy as np\n\n\ndef city_badness(position: int, tour: list, distances: np.ndarray) -> float:\n    return 0.0\n";
    let (dir, s) = scripted_run(src, 0.95)?;
    let rs = records(&dir.path().join("exp"));
    let sys = system_records(&rs);
    let c0: Vec<f64> = sys.iter().map(|r| r.baseline_cost.unwrap()).collect();
    let steps = c0.windows(2).filter(|w| w[1] != w[0]).count() + (c0[0] != 10.0) as usize;
    ensure!(steps == 1, "baseline trace {c0:?}");
    ensure!(c0[1] == 10.0 && (c0[2] - 9.5).abs() < 1e-12, "step not at iteration 3: {c0:?}");
    let r3 = sys[2];
    ensure!(r3.slot.as_deref() == Some("dr/2"), "iteration 3 searched {:?}", r3.slot);
    let want = 1.0 / (1.0 + (-10.0f64 * 0.05 * 100.0).exp());
    ensure!((r3.reward.unwrap() - want).abs() < 1e-12, "reward {:?} vs {want}", r3.reward);
    ensure!((s.outer.rewards[0] - (0.5 + want + 0.5 * (s.outer.visits[0] - 2) as f64)).abs() < 1e-12, "tree reward {:?}", s.outer.rewards);
    ensure!(s.outer.system.slot(1) == s.initial_system.slot(1), "slot 1 mutated");
    ensure!(s.outer.system.slot(3) == s.initial_system.slot(3), "slot 3 mutated");
    ensure!(s.outer.updates.len() == 1 && s.outer.updates[0].slot == 2, "updates {:?}", s.outer.updates.len());

    let (_d, s) = scripted_run(src, 1.05)?;
    let before = serde_json::to_string(&s.initial_system).unwrap();
    ensure!(serde_json::to_string(&s.outer.system).unwrap() == before, "worse candidate was kept");
    ensure!(s.outer.baseline_cost == 10.0 && s.outer.updates.is_empty(), "baseline moved on a worse candidate");
    Ok(())
}

fn final_round_semantics() -> Result<(), String> {
    ensure!(SearchParams::default().failure_floor == -50.0, "guard constant");
    ensure!(ExperimentConfig::default().failure_floor == -50.0, "configured guard");
    let prefix = "import numpy as np\n\n\ndef edge_score(i: int, j: int, distances: np.ndarray) -> float:\n    return -float(distances[i, j])";
    let good = format!("{prefix}  # good\n");
    let boom = format!("{prefix}  # boom\n");
    let base = StrategySet::baseline(Framework::Dr, Domain::Tsp).unwrap();

    let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0).factor(&good, 0.9).failing(&boom, EvalStatus::RuntimeError);
    let seq = vec![
        MockEntry::code(good.clone(), "good"),
        MockEntry::code(boom.clone(), "boom"),
        MockEntry::code(boom.clone(), "boom"),
        MockEntry::code(boom, "boom"),
        MockEntry::code(good.clone(), "good"),
    ];
    let mock = ScriptedMock::new(MockFixture { mode: MockMode::Ordinal, strict: true, sequence: seq, ..Default::default() });
    let mut s = common::session(Framework::Dr, Domain::Tsp, Box::new(ev), Box::new(mock));
    s.params.t_final = 5;
    let mut st = FinalRoundState::new(base.clone(), 10.0, vec![1], &mut s);
    let base_digest = st.best_digests[0].clone();
    final_round(&mut st, &mut s).map_err(|e| e.to_string())?;
    let turns: Vec<&LogRecord> = s.log.records().iter().filter(|r| r.phase == "final" && r.kind == "turn").collect();
    ensure!(turns.len() == 5, "{} turns", turns.len());
    ensure!(turns[4].fallback == Some(true), "no fallback after three failures");
    ensure!(turns[..4].iter().all(|r| r.fallback == Some(false)), "early fallback");
    ensure!(turns[4].start_digest.as_deref() == Some(base_digest.as_str()), "fallback did not start from the slot baseline");
    ensure!(turns[2].start_digest != turns[4].start_digest, "player 1 never left the baseline");

    // a -60% result counts as a failure, -40% does not
    for (f, counted) in [(1.6, true), (1.4, false)] {
        let worse = format!("{prefix}  # {f}\n");
        let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0).factor(&worse, f);
        let mock = ScriptedMock::new(MockFixture {
            mode: MockMode::Ordinal,
            strict: true,
            sequence: vec![MockEntry::code(worse, "worse")],
            ..Default::default()
        });
        let mut s = common::session(Framework::Dr, Domain::Tsp, Box::new(ev), Box::new(mock));
        s.params.t_final = 1;
        let mut st = FinalRoundState::new(base.clone(), 10.0, vec![1], &mut s);
        final_round(&mut st, &mut s).map_err(|e| e.to_string())?;
        let r = s.log.records().iter().find(|r| r.kind == "turn").unwrap();
        let fails = r.detail.as_ref().unwrap()["failures"].as_u64().unwrap();
        ensure!((fails == 1) == counted, "factor {f}: failures {fails}");
    }

    // install only on a strict win over both the incumbent and the other player
    let a = format!("{prefix}  # a\n");
    let b = format!("{prefix}  # b\n");
    for (fa, fb, want) in [(0.9, 0.9, None), (0.95, 0.9, Some(9.0)), (0.9, 0.95, Some(9.0)), (1.1, 1.2, None)] {
        let ev = ScriptedEvaluator::new(Domain::Tsp, 10.0).factor(&a, fa).factor(&b, fb);
        let seq = vec![MockEntry::code(a.clone(), "a"), MockEntry::code(b.clone(), "b")];
        let mock = ScriptedMock::new(MockFixture { mode: MockMode::Ordinal, strict: true, sequence: seq, ..Default::default() });
        let mut s = common::session(Framework::Dr, Domain::Tsp, Box::new(ev), Box::new(mock));
        s.params.t_final = 2;
        let mut st = FinalRoundState::new(base.clone(), 10.0, vec![1], &mut s);
        final_round(&mut st, &mut s).map_err(|e| e.to_string())?;
        match want {
            None => ensure!(st.system == base && st.cost == 10.0, "({fa}, {fb}) installed"),
            Some(c) => {
                ensure!((st.cost - c).abs() < 1e-12, "({fa}, {fb}) cost {}", st.cost);
                ensure!(st.cost < 10.0 && st.cost < 10.0 * fa.max(fb), "({fa}, {fb}) not a strict win");
            }
        }
    }
    Ok(())
}

fn analytics_math() -> Result<(), String> {
    let dim = 16;
    let vecs: Vec<Vec<f64>> = (0..200u64)
        .map(|i| {
            // Box-Muller for an isotropic direction
            let v: Vec<f64> = (0..dim as u64)
                .map(|d| {
                    let (u1, u2) = (unit(i, 2 * d).max(1e-300), unit(i, 2 * d + 1));
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let (own, other) = vecs.split_at(100);
    for k in [1, 3, 10] {
        for v in own {
            let nov: f64 = novelty(v, other, k).map_err(|e| e.to_string())?;
            let b: f64 = mean_distance(v, other).map_err(|e| e.to_string())?;
            ensure!(nov <= b + 1e-12, "novelty_{k} {nov} > b {b}");
        }
    }
    let (e1, e2): (Vec<f64>, Vec<f64>) = (vec![1.0, 0.0], vec![0.0, 1.0]);
    let neg = vec![-1.0, 0.0];
    ensure!(cosine_distance(&e1, &e1).unwrap() == 0.0, "d(v, v)");
    ensure!((cosine_distance(&e1, &e2).unwrap() - 0.5).abs() < 1e-15, "orthogonal");
    ensure!(cosine_distance(&e1, &neg).unwrap() == 1.0, "opposite");
    let sil = |own: &[Vec<f64>], other: &[Vec<f64>]| -> f64 { silhouette(own, 0, other).unwrap() };
    ensure!(sil(&[e1.clone(), e1.clone()], &[neg.clone()]) == 1.0, "separated clusters");
    ensure!((sil(&[e1.clone(), e2.clone()], &[vec![0.0, -1.0]]) - 0.5).abs() < 1e-15, "equidistant clusters");
    ensure!(sil(&[e1.clone(), neg.clone()], &[e1.clone()]) == 0.0, "inverted clusters");

    // A1=(1,0) improved, A2=(0,1) failed, B1=(-1,0) worse.
    // A1: novelty d(A1,B1)=1, silhouette a=0.5 b=1 -> 0.75
    // A2: novelty d(A2,B1)=0.5, silhouette a=0.5 b=0.5 -> 0.5
    // B1: novelty over {A1, A2} with k clamped to 2 -> 0.75, silhouette undefined
    let rec = |op: &str, imp: Option<f64>, e: &[f64]| CandidateRecord { slot: "s".into(), operator: op.to_string(), improvement: imp, embedding: e.to_vec() };
    let fx = [rec("a", Some(2.0), &e1), rec("a", None, &e2), rec("b", Some(-1.0), &neg)];
    let rep = operator_report(&fx, 3);
    let close = |x: Option<f64>, y: f64| x.is_some_and(|x| (x - y).abs() < 1e-12);
    let (a, b) = (&rep[0], &rep[1]);
    ensure!(a.candidates == 2 && a.success_rate == 50.0, "a counts");
    ensure!(close(a.novelty_mean, 0.75) && close(a.novelty_std, 0.25), "a novelty {:?} {:?}", a.novelty_mean, a.novelty_std);
    ensure!(close(a.silhouette_mean, 0.625) && close(a.silhouette_std, 0.125), "a silhouette {:?}", a.silhouette_mean);
    ensure!(b.candidates == 1 && b.success_rate == 0.0, "b counts");
    ensure!(close(b.novelty_mean, 0.75) && close(b.novelty_std, 0.0), "b novelty {:?}", b.novelty_mean);
    ensure!(b.silhouette_mean.is_none() && !b.notices.is_empty(), "b silhouette");
    Ok(())
}

fn end_to_end_determinism() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fixture.json");
    fs::write(&fixture, r#"{"mode":"slot","entries":{"dr/2":{"variant":"dr_tsp_badness_detour"},"dr/3":{"failure":"runtime"}}}"#).unwrap();
    let cfg = small(&["t_outer=6", "t_inner=4", "t_final=4", &format!("mock_fixture={}", fixture.display())]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&cfg, &a, RunOptions::default()).map_err(|e| e.to_string())?;
    run(&cfg, &b, RunOptions::default()).map_err(|e| e.to_string())?;
    ensure!(fs::read(a.join("logs/run.jsonl")).unwrap() == fs::read(b.join("logs/run.jsonl")).unwrap(), "run logs differ");
    let mut files: Vec<_> = fs::read_dir(a.join("final")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    ensure!(files.len() == 3, "{} final sources", files.len());
    for f in files {
        ensure!(fs::read(a.join("final").join(&f)).unwrap() == fs::read(b.join("final").join(&f)).unwrap(), "{f:?} differs");
    }
    let rs = records(&a);
    ensure!(rs.iter().any(|r| r.status.as_deref() == Some("runtime-error")), "fixture failures never ran");
    Ok(())
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("sigmoid anchor", sigmoid_anchor),
        ("q-value suite", q_value_suite),
        ("brute-force oracle equivalence", brute_force_equivalence),
        ("solver property suite", solver_properties),
        ("outer controller trace", outer_trace),
        ("dynamic baseline and revert", dynamic_baseline_and_revert),
        ("final-round semantics", final_round_semantics),
        ("analytics math", analytics_math),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t0 = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(()) => println!("PASS {name} ({:.2}s)", t0.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("PASS in-process executor (no runner process used)");
    if failed > 0 {
        std::process::exit(1);
    }
}
