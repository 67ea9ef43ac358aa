use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--set", "train_size=10", "--set", "train_count=2", "--set", "test_size=12", "--set", "test_count=2",
    "--set", "t_outer=3", "--set", "t_inner=2", "--set", "t_final=2", "--set", "backoff_ms=0",
];

fn motif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motif")).args(args).env_remove("RUST_LOG").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    motif(&args)
}

#[test]
fn run_then_resume_of_finished_is_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let o = run_small(&out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("test cost"));
    for f in ["config.toml", "logs/run.jsonl", "reports/summary.json", "reports/convergence.csv", "snapshots/latest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let o = motif(&["resume", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("already finished"));
}

#[test]
fn halted_run_resumes_to_the_same_log() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_small(&a, &[]).status.success());
    let o = run_small(&b, &["--halt-after", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("halted at outer iteration 1"));
    assert!(motif(&["resume", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(a.join("logs/run.jsonl")).unwrap(), fs::read(b.join("logs/run.jsonl")).unwrap());
}

#[test]
fn set_overrides_config_file_and_reaches_the_copy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "t_outer = 7\nlambda = 0.5\n").unwrap();
    let o = motif(&["show-config", "--config", cfg.to_str().unwrap(), "--set", "t_outer=2", "--set", "domain=cvrp"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("t_outer = 2") && text.contains("lambda = 0.5") && text.contains("domain = \"cvrp\""), "{text}");
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = motif(&["show-config", "--set", "no_such_key=1"]);
    assert!(!o.status.success());
    let o = motif(&["show-config", "--set", "framework=gls", "--set", "domain=bpp"]);
    assert!(!o.status.success());
    let o = motif(&["resume", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let o = motif(&["report", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no run log"));
}

#[test]
fn changed_config_is_refused_on_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    assert!(run_small(&out, &["--halt-after", "1"]).status.success());
    let p = out.join("config.toml");
    let text = fs::read_to_string(&p).unwrap().replace("t_outer = 3", "t_outer = 4");
    fs::write(&p, text).unwrap();
    let o = motif(&["resume", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing to resume"));
}

#[test]
fn report_rebuilds_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    assert!(run_small(&out, &[]).status.success());
    let before = fs::read(out.join("reports/summary.json")).unwrap();
    fs::remove_dir_all(out.join("reports")).unwrap();
    assert!(motif(&["report", out.to_str().unwrap()]).status.success());
    assert_eq!(before, fs::read(out.join("reports/summary.json")).unwrap());
    let s: serde_json::Value = serde_json::from_slice(&before).unwrap();
    assert_eq!(s["outer_iterations"], 3);
}

#[test]
fn gen_data_and_eval_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let mut args = vec!["gen-data", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    assert!(motif(&args).status.success());
    let train = fs::read_to_string(out.join("train.txt")).unwrap();
    let again = dir.path().join("again");
    let mut args = vec!["gen-data", "--out", again.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let o = motif(&args);
    assert!(o.status.success());
    assert_eq!(train, fs::read_to_string(again.join("train.txt")).unwrap());

    let mut args = vec!["eval-baseline"];
    args.extend_from_slice(SMALL);
    let o = motif(&args);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("dr/tsp baseline: train "), "{}", stdout(&o));
}

#[test]
fn fixture_path_is_relative_to_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fx.json"), r#"{"mode":"slot","entries":{"dr/3":{"failure":"runtime"}}}"#).unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "mock_fixture = \"fx.json\"\n").unwrap();
    let out = dir.path().join("exp");
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let o = motif(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("fixture.json").exists());
    assert!(fs::read_to_string(out.join("logs/run.jsonl")).unwrap().contains("runtime-error"));
}
