//! Reports rebuilt from an experiment directory: convergence and per-
//! operator diversity CSVs plus a JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use motif_core::analytics::{operator_report, CandidateRecord, MockEmbedder, OperatorReport};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::{read_snapshot, Paths};
use crate::harness::improvement;
use crate::runlog::{read_log, LogRecord, RUN_LOG};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub iteration: u64,
    pub best_p1: f64,
    pub best_p2: f64,
    pub best_overall: f64,
    pub operator: String,
}

/// One row per completed outer iteration, in order.
pub fn convergence(records: &[LogRecord]) -> Vec<ConvergenceRow> {
    records
        .iter()
        .filter(|r| r.phase == "outer" && r.kind == "system")
        .map(|r| ConvergenceRow {
            iteration: r.outer.unwrap_or(0) + 1,
            best_p1: r.best_p1.unwrap_or(f64::INFINITY),
            best_p2: r.best_p2.unwrap_or(f64::INFINITY),
            best_overall: r.baseline_cost.unwrap_or(f64::NAN),
            operator: r.operator.clone().unwrap_or_else(|| "none".into()),
        })
        .collect()
}

/// Phase-one candidates with their embeddings. Turns whose generation
/// failed carry no new code and are left out.
pub fn candidates(records: &[LogRecord], sources: &BTreeMap<String, String>, embedder: &MockEmbedder) -> Vec<CandidateRecord<String>> {
    records
        .iter()
        .filter(|r| r.phase == "outer" && r.kind == "turn" && r.status.as_deref() != Some("generation-failure"))
        .filter_map(|r| {
            let src = sources.get(r.digest.as_ref()?)?;
            Some(CandidateRecord {
                slot: r.slot.clone().unwrap_or_default(),
                operator: r.operator.clone().unwrap_or_default(),
                improvement: if r.status.as_deref() == Some("ok") { r.improvement } else { None },
                embedding: embedder.embed(src),
            })
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "best_p1", "best_p2", "best_overall", "operator"])?;
    for r in rows {
        w.write_record([r.iteration.to_string(), num(r.best_p1), num(r.best_p2), num(r.best_overall), r.operator.clone()])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| io::Error::other(e.to_string()))?).map_err(io::Error::other)
}

pub fn operators_csv(reports: &[OperatorReport<String>]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["operator", "success_rate", "novelty_mean", "novelty_std", "silhouette_mean", "silhouette_std"])?;
    for r in reports {
        w.write_record([
            r.operator.clone(),
            num(r.success_rate),
            opt(r.novelty_mean),
            opt(r.novelty_std),
            opt(r.silhouette_mean),
            opt(r.silhouette_std),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| io::Error::other(e.to_string()))?).map_err(io::Error::other)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub framework: String,
    pub domain: String,
    pub stage: String,
    pub train_baseline_cost: f64,
    pub train_final_cost: f64,
    pub train_improvement: f64,
    pub test_baseline_cost: Option<f64>,
    pub test_final_cost: Option<f64>,
    pub test_improvement: Option<f64>,
    pub outer_iterations: u64,
    pub generation_turns: u64,
    pub backend_requests: u64,
    pub instance_runs: u64,
    pub candidate_evaluations: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub final_sources: Vec<String>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub convergence: PathBuf,
    pub operators: PathBuf,
    pub summary: PathBuf,
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Rebuilds every report from the run log and the latest snapshot.
pub fn write_reports(dir: &Path) -> io::Result<ReportFiles> {
    let paths = Paths::new(dir);
    let log_path = paths.logs().join(RUN_LOG);
    if !log_path.exists() {
        return Err(io::Error::new(io::ErrorKind::NotFound, format!("no run log at {}", log_path.display())));
    }
    let records = read_log(&log_path)?;
    let config = ExperimentConfig::load(&paths.config()).map_err(io::Error::other)?;
    let snap = read_snapshot(&paths.snapshot()).map_err(io::Error::other)?;
    fs::create_dir_all(paths.reports())?;

    let conv = convergence(&records);
    let convergence_path = paths.reports().join("convergence.csv");
    fs::write(&convergence_path, convergence_csv(&conv)?)?;

    let sources: BTreeMap<String, String> =
        snap.pool.entries.iter().map(|(d, imp)| (d.clone(), imp.source(config.domain))).collect();
    let embedder = MockEmbedder { dim: config.embedding_dim, seed: config.master_seed };
    let cands = candidates(&records, &sources, &embedder);
    let ops = operator_report(&cands, config.novelty_k);
    let operators_path = paths.reports().join("operators.csv");
    fs::write(&operators_path, operators_csv(&ops)?)?;

    let test_cost = |kind: &str| {
        records.iter().rev().find(|r| r.phase == "test" && r.kind == kind).and_then(|r| r.mean_cost)
    };
    let (tb, tf) = (test_cost("baseline"), test_cost("final"));
    let train_final = snap.final_round.as_ref().map_or(snap.outer.baseline_cost, |f| f.cost);
    let sum_tokens = |f: fn(&LogRecord) -> Option<u64>| records.iter().filter_map(f).sum::<u64>();
    let mut notices: Vec<String> = records.iter().filter(|r| r.kind == "notice").filter_map(|r| r.message.clone()).collect();
    for r in &ops {
        notices.extend(r.notices.iter().map(|n| format!("{}: {n}", r.operator)));
    }
    let mut final_sources: Vec<String> = match fs::read_dir(paths.final_dir()) {
        Ok(rd) => rd.filter_map(|e| e.ok()).map(|e| format!("final/{}", e.file_name().to_string_lossy())).collect(),
        Err(_) => Vec::new(),
    };
    final_sources.sort();
    let summary = Summary {
        framework: config.framework.to_string(),
        domain: config.domain.to_string(),
        stage: format!("{:?}", snap.stage).to_lowercase(),
        train_baseline_cost: snap.initial_cost,
        train_final_cost: train_final,
        train_improvement: improvement(snap.initial_cost, train_final),
        test_baseline_cost: tb,
        test_final_cost: tf.and_then(finite_or_none),
        test_improvement: match (tb, tf) {
            (Some(b), Some(f)) => finite_or_none(improvement(b, f)),
            _ => None,
        },
        outer_iterations: snap.outer.iteration,
        generation_turns: snap.counters.turn,
        backend_requests: snap.counters.request,
        instance_runs: snap.harness.budget.used,
        candidate_evaluations: snap.harness.budget.candidates,
        prompt_tokens: sum_tokens(|r| r.prompt_tokens),
        completion_tokens: sum_tokens(|r| r.completion_tokens),
        final_sources,
        notices,
    };
    let summary_path = paths.reports().join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).map_err(io::Error::other)? + "\n")?;
    Ok(ReportFiles { convergence: convergence_path, operators: operators_path, summary: summary_path })
}
