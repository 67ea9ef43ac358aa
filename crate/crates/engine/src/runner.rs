//! Client side of the strategy-runner protocol: newline-delimited JSON
//! frames over a child process's stdin/stdout.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use motif_core::cop::{Domain, InstanceData};
use motif_core::solvers::{
    native_call, slot_descriptor, CallMode, DrView, ImplKind, SlotCall, SlotDescriptor, SlotId, SlotOutput, StrategyError,
    StrategyExecutor, StrategyImpl,
};
use motif_core::{Instance, Matrix};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::harness::source_digest;

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerConfig {
    /// Program and leading arguments; `--protocol 1` is appended.
    pub command: Vec<String>,
    pub call_timeout: Duration,
    /// Extra wait beyond the call timeout before the engine gives up.
    pub grace: Duration,
    pub startup_timeout: Duration,
}

impl RunnerConfig {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            call_timeout: Duration::from_secs(2),
            grace: Duration::from_millis(500),
            startup_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Idle,
    Loaded,
    Failed,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameError {
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FrameError>,
}

impl Frame {
    fn request(id: u64, kind: &str, slot: Option<SlotId>, payload: Option<Value>) -> Self {
        Self { id, kind: kind.into(), slot: slot.map(|s| s.to_string()), payload, result: None, error: None }
    }
}

fn error_of(e: &FrameError) -> StrategyError {
    let msg = e.message.clone();
    match e.kind.as_str() {
        "compile" => StrategyError::Compile(msg),
        "runtime" => StrategyError::Runtime(msg),
        "limit" => StrategyError::Timeout(msg),
        "invalid" => StrategyError::InvalidOutput(msg),
        _ => StrategyError::Protocol(msg),
    }
}

/// One runner child process bound to at most one source at a time.
pub struct RunnerSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    config: RunnerConfig,
    next_id: u64,
    state: SessionState,
    version: u64,
    digest: Option<String>,
    calls: u64,
    diagnostics: Vec<String>,
}

impl RunnerSession {
    /// Starts the child and performs the hello handshake.
    pub fn spawn(config: &RunnerConfig) -> Result<Self, StrategyError> {
        let (prog, rest) = config.command.split_first().ok_or_else(|| StrategyError::Protocol("empty runner command".into()))?;
        let mut child = Command::new(prog)
            .args(rest)
            .arg("--protocol")
            .arg(PROTOCOL_VERSION.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| StrategyError::Protocol(format!("cannot start runner `{prog}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut s = Self {
            child,
            stdin,
            lines: rx,
            config: config.clone(),
            next_id: 0,
            state: SessionState::Idle,
            version: 0,
            digest: None,
            calls: 0,
            diagnostics: Vec::new(),
        };
        let result = s.exchange("hello", None, Some(json!({ "version": PROTOCOL_VERSION })), config.startup_timeout, "hello-ack")?;
        let version = result.get("version").and_then(Value::as_u64).unwrap_or(0);
        if version != PROTOCOL_VERSION {
            s.fail();
            return Err(StrategyError::Protocol(format!("runner speaks protocol {version}, expected {PROTOCOL_VERSION}")));
        }
        s.version = version;
        Ok(s)
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Digest of the currently bound source.
    pub fn digest(&self) -> Option<&str> {
        self.digest.as_deref()
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Text the candidate printed, in arrival order.
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn fail(&mut self) {
        self.state = SessionState::Failed;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn exchange(
        &mut self,
        kind: &str,
        slot: Option<SlotId>,
        payload: Option<Value>,
        timeout: Duration,
        reply: &str,
    ) -> Result<Value, StrategyError> {
        if matches!(self.state, SessionState::Failed | SessionState::Closed) {
            return Err(StrategyError::Protocol(format!("runner session is {:?}", self.state).to_lowercase()));
        }
        let id = self.next_id;
        self.next_id += 1;
        let frame = Frame::request(id, kind, slot, payload);
        let text = serde_json::to_string(&frame).expect("frame serializes");
        let sent = self.stdin.as_mut().map(|w| writeln!(w, "{text}").and_then(|_| w.flush()));
        if !matches!(sent, Some(Ok(()))) {
            self.fail();
            return Err(StrategyError::Protocol("runner closed its input".into()));
        }
        loop {
            let line = match self.lines.recv_timeout(timeout) {
                Ok(l) => l,
                Err(RecvTimeoutError::Timeout) => {
                    self.fail();
                    return Err(StrategyError::Timeout(format!("no reply to {kind} within {timeout:?}")));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.fail();
                    return Err(StrategyError::Protocol("runner exited".into()));
                }
            };
            let frame: Frame = match serde_json::from_str(&line) {
                Ok(f) => f,
                Err(e) => {
                    self.fail();
                    return Err(StrategyError::Protocol(format!("malformed frame: {e}")));
                }
            };
            if frame.kind == "diagnostics" {
                let text = frame.payload.as_ref().and_then(|p| p.get("text")).and_then(Value::as_str).unwrap_or_default();
                self.diagnostics.push(text.to_string());
                continue;
            }
            if frame.id != id {
                self.fail();
                return Err(StrategyError::Protocol(format!("reply id {} does not match request {id}", frame.id)));
            }
            if frame.kind == "error" {
                let err = frame.error.unwrap_or(FrameError { kind: "protocol".into(), message: "error frame without body".into() });
                if err.kind == "protocol" {
                    self.fail();
                }
                return Err(error_of(&err));
            }
            if frame.kind != reply {
                self.fail();
                return Err(StrategyError::Protocol(format!("expected {reply}, got {}", frame.kind)));
            }
            return Ok(frame.result.unwrap_or(Value::Null));
        }
    }

    /// Compiles `source` and binds the slot's entry point, replacing any
    /// previous binding.
    pub fn load_source(&mut self, desc: &SlotDescriptor, source: &str) -> Result<(), StrategyError> {
        let arity = desc.args.len()
            + match desc.mode {
                CallMode::Pairwise => 2,
                CallMode::Each => 1,
                CallMode::Whole if desc.slot.framework == motif_core::solvers::Framework::Dr => 1,
                CallMode::Whole => 0,
            };
        let payload = json!({
            "source": source,
            "entry": desc.entry,
            "mode": desc.mode,
            "arity": arity,
        });
        let timeout = self.config.call_timeout + self.config.grace;
        self.digest = None;
        match self.exchange("load", Some(desc.slot), Some(payload), timeout, "result") {
            Ok(_) => {
                self.state = SessionState::Loaded;
                self.digest = Some(source_digest(source));
                Ok(())
            }
            Err(e) => {
                if self.state == SessionState::Loaded {
                    self.state = SessionState::Idle;
                }
                Err(e)
            }
        }
    }

    /// One solver callback: sends the payload, returns the raw result.
    pub fn call(&mut self, slot: SlotId, payload: Value) -> Result<Value, StrategyError> {
        if self.state != SessionState::Loaded {
            return Err(StrategyError::Protocol("no source loaded".into()));
        }
        self.calls += 1;
        let timeout = self.config.call_timeout + self.config.grace;
        self.exchange("call", Some(slot), Some(payload), timeout, "result")
    }

    /// Asks the runner to exit and reaps it.
    pub fn close(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if matches!(self.state, SessionState::Idle | SessionState::Loaded) {
            let id = self.next_id;
            if let Some(w) = self.stdin.as_mut() {
                let frame = serde_json::to_string(&Frame::request(id, "shutdown", None, None)).expect("frame serializes");
                let _ = writeln!(w, "{frame}").and_then(|_| w.flush());
            }
            self.stdin = None;
            for _ in 0..50 {
                if matches!(self.child.try_wait(), Ok(Some(_))) {
                    break;
                }
                thread::sleep(Duration::from_millis(10));
            }
            self.state = SessionState::Closed;
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for RunnerSession {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(m.to_rows().into_iter().map(|r| json!(r)).collect())
}

/// Value the runner passes for an argument name.
fn arg_value(name: &str, inst: &Instance, call: &SlotCall<'_, f64>) -> Result<(Value, bool), StrategyError> {
    let missing = || StrategyError::Protocol(format!("argument `{name}` is not available for {}", call.name()));
    let v = match (name, &inst.data) {
        ("distances", _) => (matrix_json(inst.distances().ok_or_else(missing)?), true),
        ("coordinates", _) => (json!(inst.coords().ok_or_else(missing)?), true),
        ("demands", InstanceData::Cvrp { demands, .. }) => (json!(demands), true),
        ("capacity", InstanceData::Cvrp { capacity, .. }) | ("capacity", InstanceData::Bpp { capacity, .. }) => {
            (json!(capacity), false)
        }
        ("prize", InstanceData::Mkp { prizes, .. }) | ("prize", InstanceData::Op { prizes, .. }) => (json!(prizes), true),
        ("weight", InstanceData::Mkp { weights, .. }) => (matrix_json(weights), true),
        ("budget", InstanceData::Op { budget, .. }) => (json!(budget), false),
        ("sizes", InstanceData::Bpp { sizes, .. }) | ("demands", InstanceData::Bpp { sizes, .. }) => (json!(sizes), true),
        _ => match (name, call) {
            ("heuristic", SlotCall::AcoProbabilities { heuristic, .. }) => (matrix_json(heuristic), true),
            ("pheromone", SlotCall::AcoProbabilities { pheromone, .. }) | ("pheromone", SlotCall::AcoUpdate { pheromone, .. }) => {
                (matrix_json(pheromone), true)
            }
            ("iteration", SlotCall::AcoProbabilities { iteration, .. }) | ("iteration", SlotCall::AcoUpdate { iteration, .. }) => {
                (json!(iteration), false)
            }
            ("n_iterations", SlotCall::AcoProbabilities { horizon, .. })
            | ("n_iterations", SlotCall::AcoUpdate { horizon, .. }) => (json!(horizon), false),
            ("solutions", SlotCall::AcoUpdate { solutions, .. }) => (json!(solutions), false),
            ("costs", SlotCall::AcoUpdate { costs, .. }) => (json!(costs), true),
            ("tour" | "sequence", SlotCall::DrBadness { partial: DrView::Sequence(s), .. })
            | ("tour" | "sequence", SlotCall::DrInsertPosition { partial: DrView::Sequence(s), .. }) => (json!(s), false),
            ("bins", SlotCall::DrBadness { partial: DrView::Bins(b), .. })
            | ("bins", SlotCall::DrInsertPosition { partial: DrView::Bins(b), .. }) => (json!(b), false),
            _ => return Err(missing()),
        },
    };
    Ok(v)
}

/// Call payload for one solver callback.
pub fn encode_call(desc: &SlotDescriptor, inst: &Instance, call: &SlotCall<'_, f64>) -> Result<Value, StrategyError> {
    let mut args = Vec::new();
    let mut arrays = Vec::new();
    if let SlotCall::DrInsertPosition { element, .. } = call {
        args.push(json!(element));
    }
    for name in desc.args {
        let (v, is_array) = arg_value(name, inst, call)?;
        if is_array {
            arrays.push(args.len());
        }
        args.push(v);
    }
    let mut payload = json!({ "mode": desc.mode, "args": args, "arrays": arrays });
    match call {
        SlotCall::DrEdgeScores => payload["n"] = json!(inst.node_count()),
        SlotCall::DrBadness { elements, .. } => payload["elements"] = json!(elements),
        _ => {}
    }
    Ok(payload)
}

fn invalid(msg: impl Into<String>) -> StrategyError {
    StrategyError::InvalidOutput(msg.into())
}

fn number(v: &Value) -> Result<f64, StrategyError> {
    v.as_f64().ok_or_else(|| invalid(format!("expected a finite number, got {v}")))
}

fn vector(v: &Value) -> Result<Vec<f64>, StrategyError> {
    v.as_array().ok_or_else(|| invalid("expected a list"))?.iter().map(number).collect()
}

fn matrix(v: &Value) -> Result<Matrix, StrategyError> {
    let rows: Vec<Vec<f64>> = v.as_array().ok_or_else(|| invalid("expected a matrix"))?.iter().map(vector).collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(invalid("ragged matrix"));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Converts a runner result into the output the solver expects.
pub fn decode_output(call: &SlotCall<'_, f64>, result: &Value) -> Result<SlotOutput<f64>, StrategyError> {
    match call {
        SlotCall::AcoInitialize => {
            let pair = result.as_array().filter(|a| a.len() == 2).ok_or_else(|| invalid("expected (heuristic, pheromone)"))?;
            Ok(SlotOutput::MatrixPair(matrix(&pair[0])?, matrix(&pair[1])?))
        }
        SlotCall::DrBadness { .. } => Ok(SlotOutput::Vector(vector(result)?)),
        SlotCall::DrInsertPosition { .. } => {
            let x = number(result)?;
            if x < 0.0 || x.fract() != 0.0 {
                return Err(invalid(format!("insert position {x} is not a nonnegative integer")));
            }
            Ok(SlotOutput::Index(x as usize))
        }
        _ => Ok(SlotOutput::Matrix(matrix(result)?)),
    }
}

/// Serves native implementations directly and external sources through
/// one runner session per slot, recycled for the whole candidate.
pub struct RunnerExecutor {
    config: RunnerConfig,
    domain: Domain,
    sessions: HashMap<SlotId, RunnerSession>,
}

impl RunnerExecutor {
    pub fn new(config: RunnerConfig, domain: Domain) -> Self {
        Self { config, domain, sessions: HashMap::new() }
    }

    fn ensure(&mut self, imp: &StrategyImpl, source: &str) -> Result<&mut RunnerSession, StrategyError> {
        let digest = source_digest(source);
        let ready = self
            .sessions
            .get(&imp.slot)
            .is_some_and(|s| s.state() == SessionState::Loaded && s.digest() == Some(digest.as_str()));
        if !ready {
            let desc = slot_descriptor(imp.slot, self.domain).map_err(|e| StrategyError::Protocol(e.to_string()))?;
            let reuse = self.sessions.get(&imp.slot).is_some_and(|s| matches!(s.state(), SessionState::Idle | SessionState::Loaded));
            if !reuse {
                let s = RunnerSession::spawn(&self.config)?;
                self.sessions.insert(imp.slot, s);
            }
            let s = self.sessions.get_mut(&imp.slot).expect("session present");
            s.load_source(&desc, source)?;
        }
        Ok(self.sessions.get_mut(&imp.slot).expect("session present"))
    }
}

impl StrategyExecutor<f64> for RunnerExecutor {
    fn load(&mut self, imp: &StrategyImpl) -> Result<(), StrategyError> {
        match &imp.kind {
            ImplKind::Native => Ok(()),
            ImplKind::External { source } => self.ensure(imp, source).map(|_| ()),
        }
    }

    fn call(&mut self, imp: &StrategyImpl, inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
        let ImplKind::External { source } = &imp.kind else {
            return native_call(imp.slot, inst, call);
        };
        let desc = slot_descriptor(imp.slot, inst.domain()).map_err(|e| StrategyError::Protocol(e.to_string()))?;
        let payload = encode_call(&desc, inst, &call)?;
        let session = self.ensure(imp, source)?;
        let result = session.call(imp.slot, payload)?;
        decode_output(&call, &result)
    }

    fn begin_candidate(&mut self) {
        self.sessions.clear();
    }
}
