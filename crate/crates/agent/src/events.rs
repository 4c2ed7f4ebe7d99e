use lore_core::{ChunkId, DocumentId};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Longest snippet carried in a [`ChunkRef`], in characters.
pub const SNIPPET_CHARS: usize = 280;

/// A citation: where a retrieved passage came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRef {
    pub document_id: DocumentId,
    pub chunk_id: ChunkId,
    pub title: String,
    pub snippet: String,
}

/// One frame of a streamed chat turn. Serialized with a `type` tag:
/// `{"type":"token","text":"..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChatEvent {
    Token {
        text: String,
    },
    ToolCall {
        name: String,
        /// Parsed arguments, or the raw text when the model sent invalid JSON.
        arguments: Value,
    },
    ToolResult {
        name: String,
        chunk_refs: Vec<ChunkRef>,
    },
    Final {
        /// Position of the answer in the conversation's message list.
        message_id: usize,
    },
    Error {
        code: String,
        message: String,
    },
}

impl ChatEvent {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ChatEvent::Error {
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, ChatEvent::Final { .. } | ChatEvent::Error { .. })
    }
}

pub mod codes {
    pub const PROVIDER_ERROR: &str = "PROVIDER_ERROR";
    pub const TIMEOUT: &str = "TIMEOUT";
    pub const TOOL_LIMIT: &str = "TOOL_LIMIT";
    pub const INTERNAL: &str = "INTERNAL";
}

/// Checks one turn against `(tool_call tool_result)* token* (final | error)`.
pub fn check_turn_grammar(events: &[ChatEvent]) -> Result<(), String> {
    #[derive(PartialEq)]
    enum At {
        Tools,
        AwaitResult,
        Tokens,
        Done,
    }
    let mut at = At::Tools;
    for (i, e) in events.iter().enumerate() {
        at = match (at, e) {
            (At::Done, _) => return Err(format!("event {i} after the terminal event")),
            (At::Tools, ChatEvent::ToolCall { .. }) => At::AwaitResult,
            (At::AwaitResult, ChatEvent::ToolResult { .. }) => At::Tools,
            (At::Tools | At::Tokens, ChatEvent::Token { .. }) => At::Tokens,
            (At::Tools | At::Tokens, ChatEvent::Final { .. } | ChatEvent::Error { .. }) => At::Done,
            (_, e) => return Err(format!("unexpected {e:?} at position {i}")),
        };
    }
    if at == At::Done {
        Ok(())
    } else {
        Err("turn did not end with final or error".into())
    }
}

pub(crate) fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((i, _)) => text[..i].to_owned(),
        None => text.to_owned(),
    }
}
