//! Deterministic provider that replays a turn script. Used for offline tests
//! and demos.
//!
//! A script is either a JSON array of turns or `{"turns": [...], "repeat_last": bool}`.
//! Each turn may carry `text`, `tool_calls` (`[{"name", "arguments", "id"?}]`,
//! arguments as an object or raw JSON text), `delay_ms`, `timeout: true`, or
//! `error: {"status", "body"}`. Tool call ids default to `call_1`, `call_2`, ...
//! counted over the provider's lifetime.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{shape_unsupported, ProviderAdapter, ProviderError, TokenSink};
use crate::message::{Conversation, Message, ToolCall};
use crate::tools::ToolDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedToolCall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    #[serde(default = "empty_object")]
    pub arguments: Value,
}

fn empty_object() -> Value {
    json!({})
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFailure {
    pub status: u16,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ScriptedToolCall>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub timeout: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ScriptedFailure>,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl Turn {
    pub fn text(text: impl Into<String>) -> Self {
        Turn {
            text: Some(text.into()),
            ..Turn::default()
        }
    }

    pub fn tool_call(name: impl Into<String>, arguments: Value) -> Self {
        Turn {
            tool_calls: vec![ScriptedToolCall {
                id: None,
                name: name.into(),
                arguments,
            }],
            ..Turn::default()
        }
    }

    pub fn error(status: u16, body: impl Into<String>) -> Self {
        Turn {
            error: Some(ScriptedFailure {
                status,
                body: body.into(),
            }),
            ..Turn::default()
        }
    }

    pub fn timeout() -> Self {
        Turn {
            timeout: true,
            ..Turn::default()
        }
    }

    pub fn delayed(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Script {
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub repeat_last: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Bare(Vec<Turn>),
    Full(Script),
}

impl Script {
    pub fn parse(json: &str) -> Result<Self, ProviderError> {
        match serde_json::from_str::<ScriptFile>(json) {
            Ok(ScriptFile::Bare(turns)) => Ok(Script {
                turns,
                repeat_last: false,
            }),
            Ok(ScriptFile::Full(s)) => Ok(s),
            Err(e) => Err(ProviderError::Script(format!("invalid script: {e}"))),
        }
    }
}

pub struct ScriptedProvider {
    script: Script,
    cursor: AtomicUsize,
    next_call: AtomicUsize,
    timeout: Option<Duration>,
    requests: Mutex<Vec<Value>>,
}

impl std::fmt::Debug for ScriptedProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScriptedProvider")
            .field("turns", &self.script.turns.len())
            .field("cursor", &self.cursor.load(Ordering::SeqCst))
            .finish()
    }
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        ScriptedProvider {
            script,
            cursor: AtomicUsize::new(0),
            next_call: AtomicUsize::new(1),
            timeout: None,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn from_turns(turns: Vec<Turn>) -> Self {
        Self::new(Script {
            turns,
            repeat_last: false,
        })
    }

    /// A provider that answers every request with `turn`.
    pub fn always(turn: Turn) -> Self {
        Self::new(Script {
            turns: vec![turn],
            repeat_last: true,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, ProviderError> {
        Script::parse(json).map(Self::new)
    }

    /// Delays longer than `timeout`, and `timeout` turns, fail after waiting this long.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    /// Requests received so far, in the wire format of [`ProviderAdapter::to_wire`].
    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn completions(&self) -> usize {
        self.cursor.load(Ordering::SeqCst)
    }

    fn next_turn(&self) -> Result<Turn, ProviderError> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        let turns = &self.script.turns;
        match turns.get(i) {
            Some(t) => Ok(t.clone()),
            None if self.script.repeat_last && !turns.is_empty() => Ok(turns[turns.len() - 1].clone()),
            None => Err(ProviderError::Script(format!("script exhausted after {} turns", turns.len()))),
        }
    }
}

fn word_pieces(text: &str) -> impl Iterator<Item = &str> {
    text.split_inclusive(char::is_whitespace)
}

#[async_trait]
impl ProviderAdapter for ScriptedProvider {
    fn provider_id(&self) -> &str {
        "scripted"
    }

    fn supports_streaming(&self) -> bool {
        true
    }

    fn encode_message(&self, m: &Message) -> Result<Value, ProviderError> {
        shape_unsupported(m)?;
        serde_json::to_value(m).map_err(|e| ProviderError::EncodingUnsupported(e.to_string()))
    }

    fn decode_message(&self, v: &Value) -> Result<Message, ProviderError> {
        let m: Message =
            serde_json::from_value(v.clone()).map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        m.check_shape()
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        Ok(m)
    }

    fn to_wire(&self, conv: &Conversation, tools: &[ToolDescriptor]) -> Result<Value, ProviderError> {
        let messages = conv
            .messages
            .iter()
            .map(|m| self.encode_message(m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(json!({ "messages": messages, "tools": tools }))
    }

    fn from_wire(&self, response: &Value) -> Result<Message, ProviderError> {
        let m = response
            .get("message")
            .ok_or_else(|| ProviderError::MalformedResponse("missing \"message\"".into()))?;
        self.decode_message(m)
    }

    async fn send(&self, request: Value, on_token: TokenSink<'_>) -> Result<Message, ProviderError> {
        self.requests
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push(request);
        let turn = self.next_turn()?;
        if turn.timeout {
            let wait = self.timeout.unwrap_or_default();
            tokio::time::sleep(wait).await;
            return Err(ProviderError::Timeout(wait));
        }
        if turn.delay_ms > 0 {
            let delay = Duration::from_millis(turn.delay_ms);
            match self.timeout {
                Some(limit) if delay > limit => {
                    tokio::time::sleep(limit).await;
                    return Err(ProviderError::Timeout(limit));
                }
                _ => tokio::time::sleep(delay).await,
            }
        }
        if let Some(failure) = turn.error {
            return Err(ProviderError::status(failure.status, &failure.body));
        }
        let content = turn.text.unwrap_or_default();
        for piece in word_pieces(&content) {
            on_token(piece);
        }
        let calls: Vec<ToolCall> = turn
            .tool_calls
            .into_iter()
            .map(|c| {
                let id = c
                    .id
                    .unwrap_or_else(|| format!("call_{}", self.next_call.fetch_add(1, Ordering::SeqCst)));
                let raw = match c.arguments {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                ToolCall::new(id, c.name, raw)
            })
            .collect();
        let reply = Message::assistant_tool_calls(content, calls);
        self.from_wire(&json!({ "message": reply }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::complete;

    fn conv() -> Conversation {
        let mut c = Conversation::new("sys");
        c.push(Message::user("hi"));
        c
    }

    #[tokio::test]
    async fn replays_turns_in_order() {
        let p = ScriptedProvider::from_json(
            r#"[{"tool_calls":[{"name":"search","arguments":{"query":"q","k":3}}]},{"text":"the answer"}]"#,
        )
        .unwrap();
        let m = complete(&conv(), &[], &p, &|_| {}).await.unwrap();
        assert_eq!(m.content, "");
        assert_eq!(m.tool_calls, vec![ToolCall::new("call_1", "search", r#"{"k":3,"query":"q"}"#)]);

        let tokens = Mutex::new(Vec::new());
        let m = complete(&conv(), &[], &p, &|t| tokens.lock().unwrap().push(t.to_owned()))
            .await
            .unwrap();
        assert_eq!(m, Message::assistant("the answer"));
        assert_eq!(*tokens.lock().unwrap(), ["the ", "answer"]);

        let err = complete(&conv(), &[], &p, &|_| {}).await.unwrap_err();
        assert!(matches!(err, crate::CompletionError::Provider(ProviderError::Script(_))));
        assert_eq!(p.requests().len(), 3);
        assert_eq!(p.requests()[0]["messages"][1], json!({"role": "user", "content": "hi"}));
    }

    #[tokio::test]
    async fn errors_and_timeouts() {
        let p = ScriptedProvider::from_turns(vec![
            Turn::error(503, "overloaded"),
            Turn::text("slow").delayed(200),
            Turn::timeout(),
        ])
        .with_timeout(Duration::from_millis(20));
        let e = complete(&conv(), &[], &p, &|_| {}).await.unwrap_err();
        assert_eq!(
            e,
            crate::CompletionError::Provider(ProviderError::Status {
                status: 503,
                body: "overloaded".into()
            })
        );
        let e = complete(&conv(), &[], &p, &|_| {}).await.unwrap_err();
        assert!(matches!(e, crate::CompletionError::Provider(ProviderError::Timeout(_))));
        let e = complete(&conv(), &[], &p, &|_| {}).await.unwrap_err();
        assert!(matches!(e, crate::CompletionError::Provider(ProviderError::Timeout(_))));
    }

    #[test]
    fn script_forms() {
        let s = Script::parse(r#"{"turns":[{"text":"x"}],"repeat_last":true}"#).unwrap();
        assert!(s.repeat_last);
        assert!(Script::parse(r#"[{"txt":"x"}]"#).is_err());
    }

    #[tokio::test]
    async fn refuses_pending_calls() {
        let p = ScriptedProvider::always(Turn::text("x"));
        let mut c = conv();
        c.push(Message::assistant_tool_calls("", vec![ToolCall::new("a", "t", "{}")]));
        assert_eq!(
            complete(&c, &[], &p, &|_| {}).await.unwrap_err(),
            crate::CompletionError::PendingToolCalls
        );
    }
}
