//! Conversation layer between the application and chat-completion providers.
//!
//! - [`message`]: canonical [`Message`]s and the [`Conversation`] that orders them
//! - [`tools`]: declaration-driven tool registration, JSON Schema generation and argument validation
//! - [`provider`]: the [`ProviderAdapter`] contract, a scripted provider and an OpenAI-compatible HTTP adapter
//!
//! The canonical message JSON (see `docs/wire-format.md`) is the stable
//! internal contract; provider formats stay private to their adapters.

pub mod message;
pub mod provider;
pub mod tools;

pub use message::{Conversation, ConversationError, Message, Role, ToolCall};
pub use provider::{complete, wire_roundtrip, CompletionError, ProviderAdapter, ProviderError};
pub use provider::{OpenAiAdapter, OpenAiConfig, Script, ScriptedFailure, ScriptedProvider, ScriptedToolCall, TokenSink, Turn};
pub use tools::{
    validate_tool_args, ArgValue, ParamSpec, ParamType, Primitive, RegistryError, ToolArgs, ToolDescriptor, ToolError,
    ToolOutcome, ToolRegistry, ToolSpec, ValidationError,
};
