//! The adapter contract between conversations and chat-completion backends.

mod openai;
mod scripted;

use std::time::Duration;

use async_trait::async_trait;
use serde_json::Value;
use thiserror::Error;

use crate::message::{Conversation, ConversationError, Message, Role};
use crate::tools::ToolDescriptor;

pub use openai::{OpenAiAdapter, OpenAiConfig};
pub use scripted::{Script, ScriptedFailure, ScriptedProvider, ScriptedToolCall, Turn};

/// Longest provider error body kept in [`ProviderError::Status`].
pub const BODY_EXCERPT: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider did not answer within {0:?}")]
    Timeout(Duration),
    #[error("could not reach provider: {0}")]
    Transport(String),
    #[error("unreadable provider response: {0}")]
    MalformedResponse(String),
    #[error("message cannot be expressed in this provider format: {0}")]
    EncodingUnsupported(String),
    #[error("script: {0}")]
    Script(String),
}

impl ProviderError {
    pub fn status(status: u16, body: &str) -> Self {
        ProviderError::Status {
            status,
            body: excerpt(body),
        }
    }
}

pub(crate) fn excerpt(body: &str) -> String {
    match body.char_indices().nth(BODY_EXCERPT) {
        Some((i, _)) => format!("{}...", &body[..i]),
        None => body.to_owned(),
    }
}

/// Callback receiving content deltas as they arrive.
pub type TokenSink<'a> = &'a (dyn Fn(&str) + Send + Sync);

#[async_trait]
pub trait ProviderAdapter: Send + Sync {
    fn provider_id(&self) -> &str;

    fn supports_streaming(&self) -> bool;

    /// One message in the provider's format.
    fn encode_message(&self, m: &Message) -> Result<Value, ProviderError>;

    /// Inverse of [`encode_message`](Self::encode_message).
    fn decode_message(&self, v: &Value) -> Result<Message, ProviderError>;

    fn to_wire(&self, conv: &Conversation, tools: &[ToolDescriptor]) -> Result<Value, ProviderError>;

    /// Reads the assistant message out of a complete (non-streamed) response body.
    fn from_wire(&self, response: &Value) -> Result<Message, ProviderError>;

    /// Sends a request built by [`to_wire`](Self::to_wire). Streaming adapters
    /// call `on_token` with each content delta before returning the full message.
    async fn send(&self, request: Value, on_token: TokenSink<'_>) -> Result<Message, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletionError {
    #[error("invalid conversation: {0}")]
    Conversation(#[from] ConversationError),
    #[error("conversation has unanswered tool calls")]
    PendingToolCalls,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Asks `adapter` for the next assistant message of `conv`. The conversation
/// itself is not modified.
pub async fn complete(
    conv: &Conversation,
    tools: &[ToolDescriptor],
    adapter: &dyn ProviderAdapter,
    on_token: TokenSink<'_>,
) -> Result<Message, CompletionError> {
    conv.validate()?;
    if !conv.pending_tool_calls().is_empty() {
        return Err(CompletionError::PendingToolCalls);
    }
    let request = adapter.to_wire(conv, tools)?;
    let reply = adapter.send(request, on_token).await?;
    if reply.role != Role::Assistant {
        return Err(ProviderError::MalformedResponse(format!("expected an assistant message, got {}", reply.role)).into());
    }
    reply
        .check_shape()
        .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
    Ok(reply)
}

/// Encodes then decodes `m` with `adapter`.
pub fn wire_roundtrip(adapter: &dyn ProviderAdapter, m: &Message) -> Result<Message, ProviderError> {
    let wire = adapter.encode_message(m)?;
    adapter.decode_message(&wire)
}

pub(crate) fn shape_unsupported(m: &Message) -> Result<(), ProviderError> {
    m.check_shape()
        .map_err(|e| ProviderError::EncodingUnsupported(e.to_string()))
}
