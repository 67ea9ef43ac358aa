use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const MAX_REASONING_SENTENCES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriFieldResponse {
    pub reasoning: String,
    pub code: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub response: TriFieldResponse,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("response is not a JSON object: {0}")]
    NotJson(String),
    #[error("response lacks the `{0}` field")]
    MissingField(&'static str),
    #[error("field `{0}` is not a string")]
    NotText(&'static str),
    #[error("code field is empty")]
    EmptyCode,
}

/// Rough sentence count: terminal punctuation followed by space or end.
pub fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.trim().chars().collect();
    let mut n = 0;
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            n += 1;
        }
    }
    if n == 0 && !chars.is_empty() {
        1
    } else {
        n
    }
}

/// Removes one surrounding markdown fence, if any.
pub fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => return t,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim_matches('\n')
}

fn object_of(text: &str) -> Result<serde_json::Map<String, Value>, ParseError> {
    let candidates = [text.trim(), strip_fence(text)];
    for c in candidates {
        if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(c) {
            return Ok(m);
        }
    }
    if let (Some(a), Some(b)) = (text.find('{'), text.rfind('}')) {
        if a < b {
            match serde_json::from_str::<Value>(&text[a..=b]) {
                Ok(Value::Object(m)) => return Ok(m),
                Ok(_) => return Err(ParseError::NotJson("top level is not an object".into())),
                Err(e) => return Err(ParseError::NotJson(e.to_string())),
            }
        }
    }
    Err(ParseError::NotJson("no JSON object found".into()))
}

fn field(m: &serde_json::Map<String, Value>, name: &'static str) -> Result<String, ParseError> {
    match m.get(name) {
        None | Some(Value::Null) => Err(ParseError::MissingField(name)),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(ParseError::NotText(name)),
    }
}

/// Parses a structured reply into reasoning, code and summary. Overlong
/// reasoning is a warning only.
pub fn parse_trifield(text: &str) -> Result<Parsed, ParseError> {
    let m = object_of(text)?;
    let reasoning = field(&m, "reasoning")?;
    let code = field(&m, "code")?;
    let summary = field(&m, "summary")?;
    let code = strip_fence(&code).to_string();
    if code.trim().is_empty() {
        return Err(ParseError::EmptyCode);
    }
    let mut warnings = Vec::new();
    let n = sentence_count(&reasoning);
    if n > MAX_REASONING_SENTENCES {
        warnings.push(format!("reasoning has {n} sentences, more than {MAX_REASONING_SENTENCES}"));
    }
    Ok(Parsed { response: TriFieldResponse { reasoning, code: format!("{}\n", code.trim_end()), summary }, warnings })
}
