use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::System, Role::User, Role::Assistant, Role::Tool];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A model's request to run a tool. `raw_arguments` is the JSON text exactly
/// as the model produced it; validation happens separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    pub raw_arguments: String,
}

impl ToolCall {
    pub fn new(id: impl Into<String>, name: impl Into<String>, raw_arguments: impl Into<String>) -> Self {
        ToolCall {
            id: id.into(),
            name: name.into(),
            raw_arguments: raw_arguments.into(),
        }
    }
}

/// Canonical chat message. Field order in JSON is `role`, `content`,
/// `tool_calls` (omitted when empty), `tool_call_id` (omitted when absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    fn plain(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::plain(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::plain(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::plain(Role::Assistant, content)
    }

    pub fn assistant_tool_calls(content: impl Into<String>, calls: Vec<ToolCall>) -> Self {
        Message {
            tool_calls: calls,
            ..Self::plain(Role::Assistant, content)
        }
    }

    pub fn tool(tool_call_id: impl Into<String>, content: impl Into<String>) -> Self {
        Message {
            tool_call_id: Some(tool_call_id.into()),
            ..Self::plain(Role::Tool, content)
        }
    }

    /// Field-level well-formedness, independent of surrounding messages.
    pub fn check_shape(&self) -> Result<(), ConversationError> {
        if !self.tool_calls.is_empty() && self.role != Role::Assistant {
            return Err(ConversationError::ToolCallsOnRole(self.role));
        }
        match (self.role, &self.tool_call_id) {
            (Role::Tool, None) => Err(ConversationError::MissingToolCallId),
            (Role::Tool, Some(_)) | (_, None) => Ok(()),
            (role, Some(_)) => Err(ConversationError::ToolCallIdOnRole(role)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConversationError {
    #[error("conversation must start with its system message")]
    SystemNotFirst,
    #[error("first message after the system prompt must come from the user, not {0}")]
    FirstNotUser(Role),
    #[error("system messages may only appear first")]
    LateSystemMessage,
    #[error("{0} messages cannot carry tool calls")]
    ToolCallsOnRole(Role),
    #[error("{0} messages cannot carry a tool_call_id")]
    ToolCallIdOnRole(Role),
    #[error("tool message without tool_call_id")]
    MissingToolCallId,
    #[error("tool message answers unknown or already answered call {0:?}")]
    UnexpectedToolResult(String),
    #[error("tool call {0:?} not answered before the next assistant turn")]
    UnansweredToolCall(String),
    #[error("duplicate tool call id {0:?}")]
    DuplicateToolCallId(String),
}

/// Ordered messages of one chat, seeded with the system prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub system_prompt: String,
    pub messages: Vec<Message>,
    pub created_at: String,
}

impl Conversation {
    pub fn new(system_prompt: impl Into<String>) -> Self {
        let system_prompt = system_prompt.into();
        Conversation {
            id: uuid::Uuid::new_v4().to_string(),
            messages: vec![Message::system(system_prompt.clone())],
            system_prompt,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }

    /// Appends `m` and returns its index.
    pub fn push(&mut self, m: Message) -> usize {
        self.messages.push(m);
        self.messages.len() - 1
    }

    /// Tool calls of the trailing assistant message still lacking a TOOL answer.
    pub fn pending_tool_calls(&self) -> Vec<&ToolCall> {
        let Some(pos) = self.messages.iter().rposition(|m| m.role == Role::Assistant) else {
            return Vec::new();
        };
        let answered: HashSet<&str> = self.messages[pos + 1..]
            .iter()
            .filter_map(|m| m.tool_call_id.as_deref())
            .collect();
        self.messages[pos]
            .tool_calls
            .iter()
            .filter(|c| !answered.contains(c.id.as_str()))
            .collect()
    }

    /// Checks ordering and tool-call linkage. Calls of the last assistant
    /// message may still be pending.
    pub fn validate(&self) -> Result<(), ConversationError> {
        let mut iter = self.messages.iter();
        match iter.next() {
            Some(m) if m.role == Role::System && m.tool_calls.is_empty() && m.tool_call_id.is_none() => {}
            _ => return Err(ConversationError::SystemNotFirst),
        }
        let mut seen_ids: HashSet<&str> = HashSet::new();
        let mut pending: Vec<&str> = Vec::new();
        for (i, m) in iter.enumerate() {
            m.check_shape()?;
            if i == 0 && m.role != Role::User {
                return Err(ConversationError::FirstNotUser(m.role));
            }
            match m.role {
                Role::System => return Err(ConversationError::LateSystemMessage),
                Role::Tool => {
                    let id = m.tool_call_id.as_deref().unwrap_or_default();
                    let Some(pos) = pending.iter().position(|p| *p == id) else {
                        return Err(ConversationError::UnexpectedToolResult(id.to_owned()));
                    };
                    pending.remove(pos);
                }
                Role::Assistant | Role::User => {
                    if let Some(first) = pending.first() {
                        return Err(ConversationError::UnansweredToolCall((*first).to_owned()));
                    }
                    for call in &m.tool_calls {
                        if !seen_ids.insert(&call.id) {
                            return Err(ConversationError::DuplicateToolCallId(call.id.clone()));
                        }
                        pending.push(&call.id);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_field_order() {
        let m = Message::assistant_tool_calls("", vec![ToolCall::new("call_1", "search", r#"{"query":"x"}"#)]);
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"role":"assistant","content":"","tool_calls":[{"id":"call_1","name":"search","raw_arguments":"{\"query\":\"x\"}"}]}"#
        );
        assert_eq!(
            serde_json::to_string(&Message::tool("call_1", "[]")).unwrap(),
            r#"{"role":"tool","content":"[]","tool_call_id":"call_1"}"#
        );
        assert_eq!(serde_json::to_string(&Message::user("hi")).unwrap(), r#"{"role":"user","content":"hi"}"#);
    }

    #[test]
    fn conversation_rules() {
        let mut c = Conversation::new("be helpful");
        assert_eq!(c.messages.len(), 1);
        c.validate().unwrap();
        c.push(Message::assistant("hello"));
        assert_eq!(c.validate(), Err(ConversationError::FirstNotUser(Role::Assistant)));
        c.messages.pop();

        c.push(Message::user("q"));
        c.push(Message::assistant_tool_calls(
            "",
            vec![ToolCall::new("a", "search", "{}"), ToolCall::new("b", "search", "{}")],
        ));
        c.validate().unwrap();
        assert_eq!(c.pending_tool_calls().len(), 2);
        c.push(Message::tool("b", "{}"));
        assert_eq!(c.pending_tool_calls()[0].id, "a");
        c.push(Message::assistant("too early"));
        assert_eq!(c.validate(), Err(ConversationError::UnansweredToolCall("a".into())));
        c.messages.pop();
        c.push(Message::tool("a", "{}"));
        c.push(Message::tool("a", "{}"));
        assert_eq!(c.validate(), Err(ConversationError::UnexpectedToolResult("a".into())));
        c.messages.pop();
        c.push(Message::assistant("done"));
        c.validate().unwrap();
        assert!(c.pending_tool_calls().is_empty());
    }

    #[test]
    fn shape_rules() {
        let mut m = Message::user("x");
        m.tool_calls.push(ToolCall::new("1", "t", "{}"));
        assert_eq!(m.check_shape(), Err(ConversationError::ToolCallsOnRole(Role::User)));
        let mut t = Message::tool("1", "x");
        t.tool_call_id = None;
        assert_eq!(t.check_shape(), Err(ConversationError::MissingToolCallId));
        let mut a = Message::assistant("x");
        a.tool_call_id = Some("1".into());
        assert_eq!(a.check_shape(), Err(ConversationError::ToolCallIdOnRole(Role::Assistant)));
    }
}
