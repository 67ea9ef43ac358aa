//! Prompt assembly, chat backends and reply parsing.

mod backend;
mod http;
mod mock;
mod prompt;
mod trifield;

pub use backend::{generate, BackendError, BackendReply, ChatBackend, GenerateOptions, Generation, GenerationError, Usage};
pub use http::{read_completion, redact, response_schema, HttpChatBackend, HttpConfig, DEFAULT_KEY_ENV};
pub use mock::{FixtureError, MockEntry, MockFixture, MockMode, ScriptedMock};
pub use prompt::{
    build_prompt, BaselineView, BundleMeta, FullSystem, HistoryEntry, MoveHistory, Operator, Phase, PromptBundle,
    PromptContext, PromptError, SolutionView, BONUS, COUNTER, INNOVATION, LEARNING, REFINEMENT,
};
pub use trifield::{parse_trifield, sentence_count, strip_fence, ParseError, Parsed, TriFieldResponse, MAX_REASONING_SENTENCES};
