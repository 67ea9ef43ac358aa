use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{BackendError, BackendReply, ChatBackend};
use super::prompt::PromptBundle;
use crate::variants::{failing_source, variant, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    /// Keyed by prompt digest.
    Digest,
    /// Keyed by the engine-wide request ordinal.
    Ordinal,
    /// Keyed by slot tag such as `dr/3`.
    Slot,
    /// Always answers with the baseline source.
    #[default]
    Identity,
}

/// One scripted reply. Exactly one way of producing code should be set:
/// explicit `code`, `raw` reply text, a named `variant`, a `failure` kind,
/// or `baseline` / `current` to echo a source from the prompt.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub baseline: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub current: bool,
}

impl MockEntry {
    pub fn code(code: impl Into<String>, summary: impl Into<String>) -> Self {
        Self { reasoning: Some("Scripted.".into()), code: Some(code.into()), summary: Some(summary.into()), ..Self::default() }
    }

    pub fn variant(name: &str) -> Self {
        Self { variant: Some(name.into()), ..Self::default() }
    }

    pub fn failure(kind: Failure) -> Self {
        Self { failure: Some(kind), ..Self::default() }
    }

    pub fn baseline() -> Self {
        Self { baseline: true, ..Self::default() }
    }

    pub fn raw(text: impl Into<String>) -> Self {
        Self { raw: Some(text.into()), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    #[serde(default)]
    pub mode: MockMode,
    /// Unmapped requests fail instead of echoing the baseline.
    #[serde(default)]
    pub strict: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub entries: BTreeMap<String, MockEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<MockEntry>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed fixture: {0}")]
    Json(#[from] serde_json::Error),
}

impl MockFixture {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Deterministic backend replaying a fixture; holds no state between calls.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedMock {
    pub fixture: MockFixture,
}

impl ScriptedMock {
    pub fn new(fixture: MockFixture) -> Self {
        Self { fixture }
    }

    pub fn identity() -> Self {
        Self::new(MockFixture::identity())
    }

    fn lookup(&self, bundle: &PromptBundle, request: u64) -> Result<MockEntry, BackendError> {
        let f = &self.fixture;
        let (key, hit) = match f.mode {
            MockMode::Identity => return Ok(MockEntry::baseline()),
            MockMode::Digest => {
                let d = bundle.digest();
                let hit = f.entries.get(&d).cloned();
                (format!("prompt digest {d}"), hit)
            }
            MockMode::Ordinal => (format!("request {request}"), f.sequence.get(request as usize).cloned()),
            MockMode::Slot => {
                let tag = bundle.meta.slot.to_string();
                let hit = f.entries.get(&tag).cloned();
                (format!("slot {tag}"), hit)
            }
        };
        match hit {
            Some(e) => Ok(e),
            None if f.strict => Err(BackendError::MissingFixture(key)),
            None => Ok(MockEntry::baseline()),
        }
    }

    fn render(&self, entry: &MockEntry, bundle: &PromptBundle) -> Result<String, BackendError> {
        if let Some(raw) = &entry.raw {
            return Ok(raw.clone());
        }
        let meta = &bundle.meta;
        let (code, summary) = if let Some(c) = &entry.code {
            (c.clone(), "scripted implementation".to_string())
        } else if let Some(name) = &entry.variant {
            let v = variant(name).ok_or_else(|| BackendError::Config(format!("fixture names unknown variant `{name}`")))?;
            (v.source.to_string(), format!("variant {name}"))
        } else if let Some(kind) = entry.failure {
            (failing_source(meta.slot, meta.domain, kind), format!("failing {}", kind.as_str()))
        } else if entry.current {
            (meta.current_source.clone(), "kept the current implementation".to_string())
        } else {
            (meta.baseline_source.clone(), "kept the baseline".to_string())
        };
        let body = serde_json::json!({
            "reasoning": entry.reasoning.clone().unwrap_or_else(|| "Scripted reply.".to_string()),
            "code": code,
            "summary": entry.summary.clone().unwrap_or(summary),
        });
        Ok(body.to_string())
    }
}

impl ChatBackend for ScriptedMock {
    fn complete(&mut self, bundle: &PromptBundle, request: u64) -> Result<BackendReply, BackendError> {
        let entry = self.lookup(bundle, request)?;
        Ok(BackendReply { content: self.render(&entry, bundle)?, usage: None })
    }

    fn name(&self) -> &str {
        "scripted-mock"
    }
}
