mod common;

use std::fs;
use std::io::Write;
use std::path::Path;

use motif_core::cop::Domain;
use motif_engine::config::ExperimentConfig;
use motif_engine::experiment::{read_snapshot, resume, run, ExperimentError, Paths, RunOptions, RunStatus, Stage};
use motif_engine::runlog::read_log;

fn quick() -> ExperimentConfig {
    common::small_config().with_overrides(&["t_outer=4".into(), "t_inner=3".into(), "t_final=2".into()]).unwrap()
}

fn log_bytes(dir: &Path) -> Vec<u8> {
    fs::read(dir.join("logs/run.jsonl")).unwrap()
}

fn halt_outer(n: u64) -> RunOptions {
    RunOptions { halt_after_outer: Some(n), ..Default::default() }
}

#[test]
fn smoke_identity_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let st = run(&quick(), &out, RunOptions::default()).unwrap();
    let s = st.snapshot();
    assert_eq!(s.stage, Stage::Done);
    assert_eq!(s.outer.visits.iter().sum::<u64>(), 4);
    assert_eq!(s.counters.turn, 4 * 3 + 3 * 2);
    for f in ["config.toml", "datasets/train.txt", "datasets/test.txt", "snapshots/latest.json", "snapshots/trees.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    for f in ["slot1_edge_score.py", "slot2_city_badness.py", "slot3_insert_position.py"] {
        assert!(out.join("final").join(f).exists(), "{f}");
    }
    assert!(matches!(resume(&out, RunOptions::default()).unwrap(), RunStatus::AlreadyDone(_)));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&quick(), &a, RunOptions::default()).unwrap();
    run(&quick(), &b, RunOptions::default()).unwrap();
    assert_eq!(log_bytes(&a), log_bytes(&b));
    for f in ["snapshots/latest.json", "reports/summary.json", "reports/convergence.csv", "reports/operators.csv", "datasets/train.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // wall time only lives in the sidecar
    let text = String::from_utf8(log_bytes(&a)).unwrap();
    assert!(!text.contains("wall"));
    assert!(a.join("logs/timing.jsonl").exists());
}

#[test]
fn halt_and_resume_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let (whole, parts) = (dir.path().join("whole"), dir.path().join("parts"));
    run(&quick(), &whole, RunOptions::default()).unwrap();

    let h = run(&quick(), &parts, halt_outer(2)).unwrap();
    assert!(matches!(h, RunStatus::Halted(_)));
    assert_eq!(h.snapshot().outer.iteration, 2);
    // a crash after the snapshot leaves extra and torn lines behind
    let mut f = fs::OpenOptions::new().append(true).open(parts.join("logs/run.jsonl")).unwrap();
    f.write_all(b"{\"event\":999,\"phase\":\"outer\",\"kind\":\"turn\"}\n{\"event\":10").unwrap();
    drop(f);
    let h = resume(&parts, RunOptions { halt_after_final: Some(1), ..Default::default() }).unwrap();
    assert!(matches!(h, RunStatus::Halted(_)));
    assert_eq!(h.snapshot().stage, Stage::Final);
    let done = resume(&parts, RunOptions::default()).unwrap();
    assert!(matches!(done, RunStatus::Finished(_)));
    assert_eq!(log_bytes(&whole), log_bytes(&parts));
    assert_eq!(fs::read(whole.join("snapshots/latest.json")).unwrap(), fs::read(parts.join("snapshots/latest.json")).unwrap());
    assert_eq!(fs::read(whole.join("reports/summary.json")).unwrap(), fs::read(parts.join("reports/summary.json")).unwrap());
}

#[test]
fn changed_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    run(&quick(), &out, halt_outer(1)).unwrap();
    let p = out.join("config.toml");
    let text = fs::read_to_string(&p).unwrap().replace("t_inner = 3", "t_inner = 4");
    fs::write(&p, text).unwrap();
    assert!(matches!(resume(&out, RunOptions::default()), Err(ExperimentError::ConfigChanged { .. })));
}

#[test]
fn corrupt_snapshot_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    run(&quick(), &out, halt_outer(1)).unwrap();
    let p = Paths::new(&out).snapshot();
    let text = fs::read_to_string(&p).unwrap();
    fs::write(&p, &text[..text.len() / 2]).unwrap();
    assert!(matches!(resume(&out, RunOptions::default()), Err(ExperimentError::CorruptSnapshot { .. })));
    fs::write(&p, text.replacen("\"version\":1", "\"version\":99", 1)).unwrap();
    assert!(matches!(resume(&out, RunOptions::default()), Err(ExperimentError::CorruptSnapshot { .. })));
}

#[test]
fn refuses_non_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("stray"), "x").unwrap();
    assert!(matches!(run(&quick(), dir.path(), RunOptions::default()), Err(ExperimentError::NotEmpty(_))));
}

#[test]
fn zero_budgets_keep_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let c = quick().with_overrides(&["t_outer=0".into(), "t_final=0".into()]).unwrap();
    let s = run(&c, &out, RunOptions::default()).unwrap();
    let s = s.snapshot();
    assert_eq!(s.counters.turn, 0);
    assert_eq!(s.final_round.as_ref().unwrap().system, s.initial_system);
    let t = s.test.as_ref().unwrap();
    assert_eq!(t.baseline_cost, t.final_cost);
    assert_eq!(t.improvement, 0.0);
    let conv = fs::read_to_string(out.join("reports/convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 1);
}

#[test]
fn reports_follow_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    run(&quick(), &out, RunOptions::default()).unwrap();
    let records = read_log(&out.join("logs/run.jsonl")).unwrap();
    let ids: Vec<u64> = records.iter().map(|r| r.event).collect();
    assert_eq!(ids, (0..records.len() as u64).collect::<Vec<_>>());

    let conv = fs::read_to_string(out.join("reports/convergence.csv")).unwrap();
    let rows: Vec<&str> = conv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("1,"));
    assert!(rows[3].starts_with("4,"));

    // test hygiene: only two held-out evaluations, both after every search event
    let test: Vec<usize> = records.iter().enumerate().filter(|(_, r)| r.dataset.as_deref() == Some("test")).map(|(i, _)| i).collect();
    assert_eq!(test.len(), 2);
    assert!(records[..test[0]].iter().all(|r| r.phase != "test"));
    assert!(records[test[0]..].iter().all(|r| r.phase == "test"));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("reports/summary.json")).unwrap()).unwrap();
    let tb = records[test[0]].mean_cost.unwrap();
    let tf = records[test[1]].mean_cost.unwrap();
    assert_eq!(summary["test_baseline_cost"].as_f64().unwrap(), tb);
    assert_eq!(summary["test_final_cost"].as_f64().unwrap(), tf);
    assert!((summary["test_improvement"].as_f64().unwrap() - (tb - tf) / tb * 100.0).abs() < 1e-9);
    let snap = read_snapshot(&Paths::new(&out).snapshot()).unwrap();
    assert_eq!(summary["generation_turns"].as_u64().unwrap(), snap.counters.turn);
    assert_eq!(summary["candidate_evaluations"].as_u64().unwrap(), snap.harness.budget.candidates);
    let ops = fs::read_to_string(out.join("reports/operators.csv")).unwrap();
    assert!(ops.starts_with("operator,"));
}

fn fixture_config(dir: &Path, json: &str, extra: &[&str]) -> ExperimentConfig {
    let p = dir.join("fixture.json");
    fs::write(&p, json).unwrap();
    let mut sets = vec![format!("mock_fixture={}", p.display())];
    sets.extend(extra.iter().map(|s| s.to_string()));
    quick().with_overrides(&sets).unwrap()
}

#[test]
fn worse_real_variant_is_reverted() {
    // nearest insertion loses to the min-cost baseline on these instances
    let dir = tempfile::tempdir().unwrap();
    let c = fixture_config(dir.path(), r#"{"mode":"slot","entries":{"dr/3":{"variant":"dr_tsp_insert_nearest"}}}"#, &[]);
    let out = dir.path().join("exp");
    let s = run(&c, &out, RunOptions::default()).unwrap();
    let s = s.snapshot();
    assert!(s.outer.updates.is_empty());
    assert_eq!(s.final_round.as_ref().unwrap().system, s.initial_system);
    let records = read_log(&out.join("logs/run.jsonl")).unwrap();
    let tried = records.iter().filter(|r| r.kind == "turn" && r.slot.as_deref() == Some("dr/3")).count();
    assert!(tried > 0);
    assert!(records.iter().filter(|r| r.kind == "system").all(|r| r.detail.as_ref().unwrap()["improved"] == false));
    let kept = fs::read_to_string(out.join("final/slot3_insert_position.py")).unwrap();
    let base = motif_core::solvers::baseline_source(motif_core::solvers::SlotId::new(motif_core::solvers::Framework::Dr, 3), Domain::Tsp).unwrap();
    assert_eq!(kept, base);
    assert!(out.join("fixture.json").exists());
}

#[test]
fn strict_fixture_gap_aborts_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = fixture_config(dir.path(), r#"{"mode":"slot","strict":true,"entries":{}}"#, &[]);
    let out = dir.path().join("exp");
    assert!(matches!(run(&c, &out, RunOptions::default()), Err(ExperimentError::Search(_))));
}

#[test]
fn budget_stops_search_and_still_tests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    // the baseline spends all 3 runs; identity candidates are cache hits, the variant is not
    let c = fixture_config(dir.path(), r#"{"mode":"slot","entries":{"dr/3":{"variant":"dr_tsp_insert_nearest"}}}"#, &["budget=3"]);
    let s = run(&c, &out, RunOptions::default()).unwrap();
    let s = s.snapshot();
    assert_eq!(s.stage, Stage::Done);
    assert_eq!(s.harness.budget.used, 3);
    assert!(s.outer.iteration < 4);
    assert!(s.test.is_some());
    let records = read_log(&out.join("logs/run.jsonl")).unwrap();
    assert!(records.iter().any(|r| r.kind == "notice"));
}

#[test]
fn scripted_evaluator_drives_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let src = "import numpy as np\n\n\ndef city_badness(position: int, tour: list, distances: np.ndarray) -> float:\n    return 0.0\n";
    let ev = common::ScriptedEvaluator::new(Domain::Tsp, 10.0).factor(src, 0.9);
    let json = serde_json::json!({"mode": "slot", "entries": {"dr/2": {"code": src, "summary": "flat"}}}).to_string();
    let c = fixture_config(dir.path(), &json, &[]);
    let out = dir.path().join("exp");
    let opts = RunOptions { evaluator: Some(Box::new(ev)), ..Default::default() };
    let s = run(&c, &out, opts).unwrap();
    let s = s.snapshot();
    assert!((s.final_round.as_ref().unwrap().cost - 9.0).abs() < 1e-9);
    let t = s.test.as_ref().unwrap();
    assert!((t.improvement - 10.0).abs() < 1e-9);
}
