use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::PromptBundle;
use super::trifield::{parse_trifield, TriFieldResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: Usage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub content: String,
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    /// Network or server trouble; retried with backoff.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no fixture entry for {0}")]
    MissingFixture(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
}

pub trait ChatBackend {
    /// One completion. `request` is the engine-wide request ordinal.
    fn complete(&mut self, bundle: &PromptBundle, request: u64) -> Result<BackendReply, BackendError>;

    fn name(&self) -> &str;

    /// Redacted request/response records since the last call.
    fn take_exchanges(&mut self) -> Vec<serde_json::Value> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// Extra attempts after the first.
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self { retries: 3, backoff: Duration::from_millis(500) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub response: TriFieldResponse,
    pub attempts: u32,
    pub usage: Option<Usage>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("generation failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String, usage: Option<Usage> },
    /// Strict fixtures abort the run instead of recording a failure.
    #[error("missing fixture: {0}")]
    MissingFixture(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
}

/// Asks the backend until a reply parses, up to `1 + retries` attempts.
/// Every attempt advances `counter`.
pub fn generate(
    bundle: &PromptBundle,
    backend: &mut dyn ChatBackend,
    opts: &GenerateOptions,
    counter: &mut u64,
) -> Result<Generation, GenerationError> {
    let mut usage: Option<Usage> = None;
    let mut last = String::new();
    let attempts = opts.retries + 1;
    for attempt in 1..=attempts {
        let request = *counter;
        *counter += 1;
        match backend.complete(bundle, request) {
            Ok(reply) => {
                if let Some(u) = reply.usage {
                    usage.get_or_insert_with(Usage::default).add(u);
                }
                match parse_trifield(&reply.content) {
                    Ok(p) => {
                        return Ok(Generation { response: p.response, attempts: attempt, usage, warnings: p.warnings })
                    }
                    Err(e) => {
                        log::warn!("attempt {attempt}: unusable reply: {e}");
                        last = e.to_string();
                    }
                }
            }
            Err(BackendError::MissingFixture(k)) => return Err(GenerationError::MissingFixture(k)),
            Err(BackendError::Config(m)) => return Err(GenerationError::Config(m)),
            Err(BackendError::Transport(m)) => {
                log::warn!("attempt {attempt}: {m}");
                last = m;
                if attempt < attempts {
                    thread::sleep(opts.backoff * attempt);
                }
            }
        }
    }
    Err(GenerationError::Exhausted { attempts, last, usage })
}
