//! Experiment lifecycle on disk: run, resume, datasets and snapshots.
//!
//! Layout under the experiment directory:
//! `config.toml`, `fixture.json` (mock runs), `datasets/{train,test}.txt`,
//! `snapshots/latest.json`, `snapshots/trees.json`, `logs/run.jsonl`,
//! `logs/timing.jsonl`, `reports/`, `final/`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use motif_core::cop::DatasetRole;
use motif_core::solvers::{slot_descriptor, StrategySet};
use motif_core::Dataset;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmcts::StrategyTree;
use crate::config::{BackendKind, ConfigError, ExecutorKind, ExperimentConfig};
use crate::gateway::{BackendError, ChatBackend, FixtureError, HttpChatBackend, HttpConfig, MockFixture, ScriptedMock};
use crate::harness::{improvement, Budget, Harness, HarnessState, SystemEvaluator};
use crate::inproc::InProcessExecutor;
use crate::orchestrator::{final_turn, init_trees, outer_iteration, FinalRoundState, OuterState};
use crate::runlog::{LogRecord, RunLog};
use crate::runner::{RunnerConfig, RunnerExecutor};
use crate::session::{Counters, SearchError, Session, SourcePool};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Outer,
    Final,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub baseline_cost: f64,
    #[serde(with = "crate::numfmt")]
    pub final_cost: f64,
    #[serde(with = "crate::numfmt")]
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub config_hash: String,
    pub stage: Stage,
    pub initial_system: StrategySet,
    pub initial_cost: f64,
    pub outer: OuterState,
    pub trees: Vec<StrategyTree>,
    pub final_round: Option<FinalRoundState>,
    pub pool: SourcePool,
    pub counters: Counters,
    pub harness: HarnessState,
    pub log_events: u64,
    pub test: Option<TestOutcome>,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt snapshot {path}: {message}")]
    CorruptSnapshot { path: PathBuf, message: String },
    #[error("config hash {found} differs from the snapshot's {expected}; refusing to resume")]
    ConfigChanged { expected: String, found: String },
    #[error("{0} already exists and is not empty")]
    NotEmpty(PathBuf),
    #[error("dataset trouble: {0}")]
    Dataset(String),
    #[error("initial baseline failed on train: {0}")]
    Baseline(String),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

/// Test hooks; default options run the configured components to the end.
#[derive(Default)]
pub struct RunOptions {
    /// Stop after this many completed outer iterations.
    pub halt_after_outer: Option<u64>,
    /// Stop after this many final-round turns in this invocation.
    pub halt_after_final: Option<u64>,
    pub evaluator: Option<Box<dyn SystemEvaluator>>,
    pub backend: Option<Box<dyn ChatBackend>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Finished(Box<Snapshot>),
    Halted(Box<Snapshot>),
    AlreadyDone(Box<Snapshot>),
}

impl RunStatus {
    pub fn snapshot(&self) -> &Snapshot {
        match self {
            RunStatus::Finished(s) | RunStatus::Halted(s) | RunStatus::AlreadyDone(s) => s,
        }
    }
}

pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn fixture(&self) -> PathBuf {
        self.root.join("fixture.json")
    }
    pub fn datasets(&self) -> PathBuf {
        self.root.join("datasets")
    }
    pub fn dataset(&self, role: DatasetRole) -> PathBuf {
        self.datasets().join(format!("{}.txt", role.as_str()))
    }
    pub fn snapshots(&self) -> PathBuf {
        self.root.join("snapshots")
    }
    pub fn snapshot(&self) -> PathBuf {
        self.snapshots().join("latest.json")
    }
    pub fn logs(&self) -> PathBuf {
        self.root.join("logs")
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }
    pub fn final_dir(&self) -> PathBuf {
        self.root.join("final")
    }
}

pub fn generate_datasets(config: &ExperimentConfig) -> Result<(Dataset, Dataset), ExperimentError> {
    let gen = |size, count, seed, role| {
        Dataset::generate(config.domain, size, count, seed, role).map_err(|e| ExperimentError::Dataset(e.to_string()))
    };
    Ok((
        gen(config.train_size, config.train_count, config.train_seed(), DatasetRole::Train)?,
        gen(config.test_size, config.test_count, config.test_seed(), DatasetRole::Test)?,
    ))
}

fn load_dataset(path: &Path) -> Result<Dataset, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Dataset::from_text(&text).map_err(|e| ExperimentError::Dataset(format!("{}: {e}", path.display())))
}

fn write_atomic(path: &Path, text: &str) -> Result<(), ExperimentError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let snap: Snapshot = serde_json::from_str(&text)
        .map_err(|e| ExperimentError::CorruptSnapshot { path: path.to_path_buf(), message: e.to_string() })?;
    if snap.version != SNAPSHOT_VERSION {
        return Err(ExperimentError::CorruptSnapshot {
            path: path.to_path_buf(),
            message: format!("unsupported snapshot version {}", snap.version),
        });
    }
    Ok(snap)
}

fn build_evaluator(config: &ExperimentConfig, train: Dataset, test: Dataset) -> Box<dyn SystemEvaluator> {
    let exec: Box<dyn motif_core::solvers::StrategyExecutor<f64>> = match config.executor {
        ExecutorKind::InProcess => Box::new(InProcessExecutor::standard()),
        ExecutorKind::Runner => {
            let mut rc = RunnerConfig::new(config.runner_command.clone());
            rc.call_timeout = Duration::from_secs_f64(config.call_timeout_s);
            Box::new(RunnerExecutor::new(rc, config.domain))
        }
    };
    let mut h = Harness::new(train, test, config.solver_params(), exec, Budget::new(config.budget_limit()));
    h.instance_timeout = Duration::from_secs_f64(config.instance_timeout_s);
    Box::new(h)
}

fn build_backend(config: &ExperimentConfig, paths: &Paths) -> Result<Box<dyn ChatBackend>, ExperimentError> {
    Ok(match config.backend {
        BackendKind::Mock => {
            let p = paths.fixture();
            let fixture = if p.exists() { MockFixture::load(&p)? } else { MockFixture::identity() };
            Box::new(ScriptedMock::new(fixture))
        }
        BackendKind::Http => {
            let mut hc = HttpConfig::new(config.http_endpoint.clone(), config.http_model.clone());
            hc.temperature = config.temperature;
            hc.timeout = Duration::from_secs_f64(config.http_timeout_s);
            hc.key_env = config.api_key_env.clone();
            Box::new(HttpChatBackend::new(hc)?)
        }
    })
}

struct Live {
    paths: Paths,
    hash: String,
    session: Session,
    snap: Snapshot,
}

impl Live {
    fn save(&mut self) -> Result<(), ExperimentError> {
        self.snap.pool = self.session.pool.clone();
        self.snap.counters = self.session.counters;
        self.snap.harness = self.session.evaluator.state();
        self.snap.log_events = self.session.log.len();
        let text = serde_json::to_string(&self.snap).map_err(|e| ExperimentError::CorruptSnapshot {
            path: self.paths.snapshot(),
            message: e.to_string(),
        })?;
        write_atomic(&self.paths.snapshot(), &text)?;
        let trees = serde_json::json!({ "trees": &self.snap.trees, "pool": &self.snap.pool });
        write_atomic(&self.paths.snapshots().join("trees.json"), &serde_json::to_string_pretty(&trees).expect("trees serialize"))
    }
}

/// Starts a fresh experiment in `dir`. The mock fixture named by the
/// config, if any, is copied into the directory first.
pub fn run(config: &ExperimentConfig, dir: &Path, mut opts: RunOptions) -> Result<RunStatus, ExperimentError> {
    config.validate()?;
    let paths = Paths::new(dir);
    if dir.exists() && fs::read_dir(dir).map_err(io_err(dir))?.next().is_some() {
        return Err(ExperimentError::NotEmpty(dir.to_path_buf()));
    }
    for d in [paths.datasets(), paths.snapshots(), paths.logs(), paths.reports(), paths.final_dir()] {
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    fs::write(paths.config(), config.to_toml()?).map_err(io_err(&paths.config()))?;
    if let Some(src) = config.fixture_path(Path::new(".")) {
        fs::copy(&src, paths.fixture()).map_err(io_err(&src))?;
    }
    let (train, test) = generate_datasets(config)?;
    for (role, d) in [(DatasetRole::Train, &train), (DatasetRole::Test, &test)] {
        fs::write(paths.dataset(role), d.to_text()).map_err(io_err(&paths.dataset(role)))?;
    }
    let evaluator = match opts.evaluator.take() {
        Some(e) => e,
        None => build_evaluator(config, train, test),
    };
    let backend = match opts.backend.take() {
        Some(b) => b,
        None => build_backend(config, &paths)?,
    };
    let log = RunLog::open(&paths.logs(), 0).map_err(io_err(&paths.logs()))?;
    let mut session = Session {
        framework: config.framework,
        domain: config.domain,
        params: config.search_params(),
        generation: config.generate_options(),
        evaluator,
        backend,
        log,
        pool: SourcePool::default(),
        counters: Counters::default(),
    };
    let initial = StrategySet::baseline(config.framework, config.domain).map_err(|e| ExperimentError::Baseline(e.to_string()))?;
    let r = session.evaluate_logged(&initial, DatasetRole::Train, None, LogRecord::new("setup", "baseline"))?;
    if !r.status.is_ok() {
        return Err(ExperimentError::Baseline(format!("{}: {}", r.status, r.message.unwrap_or_default())));
    }
    let slots = config.searchable_slots();
    let trees = init_trees(&initial, r.mean_cost, &slots, &mut session);
    let snap = Snapshot {
        version: SNAPSHOT_VERSION,
        config_hash: config.hash(),
        stage: Stage::Outer,
        initial_system: initial.clone(),
        initial_cost: r.mean_cost,
        outer: OuterState::new(initial, r.mean_cost, slots),
        trees,
        final_round: None,
        pool: SourcePool::default(),
        counters: Counters::default(),
        harness: HarnessState::default(),
        log_events: 0,
        test: None,
    };
    let mut live = Live { paths, hash: config.hash(), session, snap };
    live.save()?;
    drive(config, &mut live, &opts)
}

/// Continues the experiment in `dir` from its last snapshot.
pub fn resume(dir: &Path, mut opts: RunOptions) -> Result<RunStatus, ExperimentError> {
    let paths = Paths::new(dir);
    let config = ExperimentConfig::load(&paths.config())?;
    let snap = read_snapshot(&paths.snapshot())?;
    let hash = config.hash();
    if hash != snap.config_hash {
        return Err(ExperimentError::ConfigChanged { expected: snap.config_hash, found: hash });
    }
    if snap.stage == Stage::Done {
        return Ok(RunStatus::AlreadyDone(Box::new(snap)));
    }
    let mut evaluator = match opts.evaluator.take() {
        Some(e) => e,
        None => build_evaluator(&config, load_dataset(&paths.dataset(DatasetRole::Train))?, load_dataset(&paths.dataset(DatasetRole::Test))?),
    };
    evaluator.restore(snap.harness.clone());
    let backend = match opts.backend.take() {
        Some(b) => b,
        None => build_backend(&config, &paths)?,
    };
    let log = RunLog::open(&paths.logs(), snap.log_events).map_err(io_err(&paths.logs()))?;
    let session = Session {
        framework: config.framework,
        domain: config.domain,
        params: config.search_params(),
        generation: config.generate_options(),
        evaluator,
        backend,
        log,
        pool: snap.pool.clone(),
        counters: snap.counters,
    };
    let mut live = Live { paths, hash, session, snap };
    drive(&config, &mut live, &opts)
}

/// Re-checks the pairing of a config file with a snapshot.
pub fn config_matches(dir: &Path) -> Result<bool, ExperimentError> {
    let paths = Paths::new(dir);
    let config = ExperimentConfig::load(&paths.config())?;
    Ok(read_snapshot(&paths.snapshot())?.config_hash == config.hash())
}

fn drive(config: &ExperimentConfig, live: &mut Live, opts: &RunOptions) -> Result<RunStatus, ExperimentError> {
    debug_assert_eq!(live.hash, live.snap.config_hash);
    if live.snap.stage == Stage::Outer {
        while (live.snap.outer.iteration as usize) < config.t_outer {
            if opts.halt_after_outer.is_some_and(|n| live.snap.outer.iteration >= n) {
                return Ok(RunStatus::Halted(Box::new(live.snap.clone())));
            }
            match outer_iteration(&mut live.snap.outer, &mut live.snap.trees, &mut live.session) {
                Ok(_) => live.save()?,
                Err(SearchError::BudgetExhausted) => {
                    let mut r = LogRecord::new("outer", "notice");
                    r.outer = Some(live.snap.outer.iteration);
                    r.message = Some("evaluation budget exhausted; outer search stopped".into());
                    live.session.log(r, None)?;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let outer = &live.snap.outer;
        let fr = FinalRoundState::new(outer.system.clone(), outer.baseline_cost, outer.slots.clone(), &mut live.session);
        live.snap.final_round = Some(fr);
        live.snap.stage = Stage::Final;
        live.save()?;
    }
    if live.snap.stage == Stage::Final {
        let mut turns = 0;
        loop {
            let fr = live.snap.final_round.as_mut().expect("final stage has state");
            if fr.is_done() {
                break;
            }
            if opts.halt_after_final.is_some_and(|n| turns >= n) {
                return Ok(RunStatus::Halted(Box::new(live.snap.clone())));
            }
            final_turn(fr, &mut live.session)?;
            turns += 1;
            live.save()?;
        }
        let fr = live.snap.final_round.as_ref().expect("final stage has state");
        let (final_system, initial) = (fr.system.clone(), live.snap.initial_system.clone());
        let mut rec = LogRecord::new("test", "baseline");
        let b = live.session.evaluate_logged(&initial, DatasetRole::Test, None, rec)?;
        rec = LogRecord::new("test", "final");
        let f = live.session.evaluate_logged(&final_system, DatasetRole::Test, Some(b.mean_cost), rec)?;
        live.snap.test =
            Some(TestOutcome { baseline_cost: b.mean_cost, final_cost: f.mean_cost, improvement: improvement(b.mean_cost, f.mean_cost) });
        write_final_sources(&live.paths.final_dir(), &final_system)?;
        live.snap.stage = Stage::Done;
        live.save()?;
        crate::report::write_reports(&live.paths.root).map_err(|e| ExperimentError::Io { path: live.paths.reports(), source: e })?;
    }
    Ok(RunStatus::Finished(Box::new(live.snap.clone())))
}

/// One Python file per slot, named `slot<k>_<entry>.py`.
pub fn write_final_sources(dir: &Path, set: &StrategySet) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut out = Vec::new();
    for imp in &set.slots {
        let entry = slot_descriptor(imp.slot, set.domain).map(|d| d.entry).unwrap_or("strategy");
        let p = dir.join(format!("slot{}_{entry}.py", imp.slot.index));
        fs::write(&p, imp.source(set.domain)).map_err(io_err(&p))?;
        out.push(p);
    }
    Ok(out)
}

/// Scores the all-baseline set on both datasets of `config`.
pub fn eval_baseline(config: &ExperimentConfig) -> Result<(f64, f64), ExperimentError> {
    let (train, test) = generate_datasets(config)?;
    let mut ev = build_evaluator(config, train, test);
    let set = StrategySet::baseline(config.framework, config.domain).map_err(|e| ExperimentError::Baseline(e.to_string()))?;
    let a = ev.evaluate(&set, DatasetRole::Train, None);
    let b = ev.evaluate(&set, DatasetRole::Test, None);
    for r in [&a, &b] {
        if !r.status.is_ok() {
            return Err(ExperimentError::Baseline(format!("{}: {}", r.status, r.message.clone().unwrap_or_default())));
        }
    }
    Ok((a.mean_cost, b.mean_cost))
}
