//! The retrieval chat loop.
//!
//! A [`ChatSession`] binds a principal to a set of selected collections and a
//! conversation. Each [`ChatSession::run_turn`] asks the model for a reply;
//! when the reply requests tools they are run (the bundled `search` tool
//! queries the selected collections) and the model is asked again, up to
//! `max_tool_rounds` times. Progress streams out as [`ChatEvent`]s following
//! `(tool_call tool_result)* token* (final | error)`.

pub mod events;
pub mod search;
mod session;

pub use events::{check_turn_grammar, codes, ChatEvent, ChunkRef, SNIPPET_CHARS};
pub use search::{chunk_refs, clamp_k, search_spec, SearchResult, ToolContext, EMPTY_SCOPE, MAX_K, SEARCH_TOOL};
pub use session::{
    Agent, AgentConfig, AgentError, ChatSession, TurnSummary, DEFAULT_MAX_TOOL_ROUNDS, DEFAULT_SYSTEM_PROMPT,
    TOOL_LIMIT_APOLOGY,
};
