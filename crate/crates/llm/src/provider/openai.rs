//! Client for OpenAI-style `POST {base_url}/chat/completions` endpoints,
//! which most hosted and self-hosted model servers expose.

use std::time::Duration;

use async_trait::async_trait;
use futures::StreamExt;
use serde_json::{json, Map, Value};

use super::{shape_unsupported, ProviderAdapter, ProviderError, TokenSink};
use crate::message::{Conversation, Message, Role, ToolCall};
use crate::tools::ToolDescriptor;

#[derive(Debug, Clone)]
pub struct OpenAiConfig {
    /// Up to and including the version segment, e.g. `http://localhost:11434/v1`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub stream: bool,
}

impl OpenAiConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        OpenAiConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            stream: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenAiAdapter {
    config: OpenAiConfig,
    http: reqwest::Client,
}

impl OpenAiAdapter {
    pub fn new(mut config: OpenAiConfig) -> Self {
        config.base_url = config.base_url.trim_end_matches('/').to_owned();
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("reqwest client builds");
        OpenAiAdapter { config, http }
    }

    pub fn config(&self) -> &OpenAiConfig {
        &self.config
    }

    fn transport(&self, e: reqwest::Error) -> ProviderError {
        if e.is_timeout() {
            ProviderError::Timeout(self.config.timeout)
        } else {
            ProviderError::Transport(e.to_string())
        }
    }

    async fn read_stream(&self, resp: reqwest::Response, on_token: TokenSink<'_>) -> Result<Message, ProviderError> {
        let mut acc = StreamAccumulator::default();
        let mut buf: Vec<u8> = Vec::new();
        let mut body = resp.bytes_stream();
        while let Some(chunk) = body.next().await {
            buf.extend_from_slice(&chunk.map_err(|e| self.transport(e))?);
            while let Some(pos) = buf.iter().position(|&b| b == b'\n') {
                let line: Vec<u8> = buf.drain(..=pos).collect();
                let line = String::from_utf8_lossy(&line);
                if acc.feed_line(line.trim_end_matches(['\r', '\n']), on_token)? {
                    return acc.finish();
                }
            }
        }
        if !buf.is_empty() {
            let line = String::from_utf8_lossy(&buf).into_owned();
            acc.feed_line(line.trim_end(), on_token)?;
        }
        acc.finish()
    }
}

#[derive(Default)]
struct StreamAccumulator {
    started: bool,
    content: String,
    calls: Vec<(Option<String>, String, String)>,
}

impl StreamAccumulator {
    /// Returns true once the terminating `[DONE]` line has been seen.
    fn feed_line(&mut self, line: &str, on_token: TokenSink<'_>) -> Result<bool, ProviderError> {
        let Some(data) = line.strip_prefix("data:") else {
            return Ok(false);
        };
        let data = data.trim();
        if data == "[DONE]" {
            return Ok(true);
        }
        let event: Value = serde_json::from_str(data)
            .map_err(|e| ProviderError::MalformedResponse(format!("bad stream event: {e}")))?;
        let Some(delta) = event.pointer("/choices/0/delta") else {
            return Ok(false);
        };
        self.started = true;
        if let Some(text) = delta.get("content").and_then(Value::as_str) {
            if !text.is_empty() {
                on_token(text);
                self.content.push_str(text);
            }
        }
        for part in delta.get("tool_calls").and_then(Value::as_array).into_iter().flatten() {
            let index = part.get("index").and_then(Value::as_u64).unwrap_or(0) as usize;
            if index > 1024 {
                return Err(ProviderError::MalformedResponse(format!("tool call index {index}")));
            }
            if self.calls.len() <= index {
                self.calls.resize(index + 1, (None, String::new(), String::new()));
            }
            let slot = &mut self.calls[index];
            if let Some(id) = part.get("id").and_then(Value::as_str) {
                slot.0 = Some(id.to_owned());
            }
            if let Some(f) = part.get("function") {
                if let Some(name) = f.get("name").and_then(Value::as_str) {
                    slot.1.push_str(name);
                }
                if let Some(args) = f.get("arguments").and_then(Value::as_str) {
                    slot.2.push_str(args);
                }
            }
        }
        Ok(false)
    }

    fn finish(self) -> Result<Message, ProviderError> {
        if !self.started {
            return Err(ProviderError::MalformedResponse("stream ended without any delta".into()));
        }
        let calls = self
            .calls
            .into_iter()
            .map(|(id, name, args)| {
                let id = id.ok_or_else(|| ProviderError::MalformedResponse("streamed tool call without id".into()))?;
                Ok(ToolCall::new(id, name, args))
            })
            .collect::<Result<Vec<_>, ProviderError>>()?;
        Ok(Message::assistant_tool_calls(self.content, calls))
    }
}

fn malformed(what: &str) -> ProviderError {
    ProviderError::MalformedResponse(what.to_owned())
}

#[async_trait]
impl ProviderAdapter for OpenAiAdapter {
    fn provider_id(&self) -> &str {
        "openai-compatible"
    }

    fn supports_streaming(&self) -> bool {
        self.config.stream
    }

    fn encode_message(&self, m: &Message) -> Result<Value, ProviderError> {
        shape_unsupported(m)?;
        let mut out = Map::new();
        out.insert("role".into(), Value::String(m.role.as_str().into()));
        // The format uses null content for assistant messages that only call tools.
        let content = if m.role == Role::Assistant && m.content.is_empty() && !m.tool_calls.is_empty() {
            Value::Null
        } else {
            Value::String(m.content.clone())
        };
        out.insert("content".into(), content);
        if !m.tool_calls.is_empty() {
            let calls = m
                .tool_calls
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "type": "function",
                        "function": { "name": c.name, "arguments": c.raw_arguments },
                    })
                })
                .collect();
            out.insert("tool_calls".into(), Value::Array(calls));
        }
        if let Some(id) = &m.tool_call_id {
            out.insert("tool_call_id".into(), Value::String(id.clone()));
        }
        Ok(Value::Object(out))
    }

    fn decode_message(&self, v: &Value) -> Result<Message, ProviderError> {
        let role = match v.get("role").and_then(Value::as_str) {
            Some("system") | Some("developer") => Role::System,
            Some("user") => Role::User,
            Some("assistant") => Role::Assistant,
            Some("tool") => Role::Tool,
            other => return Err(ProviderError::MalformedResponse(format!("unknown role {other:?}"))),
        };
        let content = match v.get("content") {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(malformed("non-text message content")),
        };
        let mut tool_calls = Vec::new();
        for c in v.get("tool_calls").and_then(Value::as_array).into_iter().flatten() {
            let id = c.get("id").and_then(Value::as_str).ok_or_else(|| malformed("tool call without id"))?;
            let f = c.get("function").ok_or_else(|| malformed("tool call without function"))?;
            let name = f.get("name").and_then(Value::as_str).ok_or_else(|| malformed("tool call without name"))?;
            let args = match f.get("arguments") {
                Some(Value::String(s)) => s.clone(),
                None | Some(Value::Null) => String::new(),
                // some servers send the object itself
                Some(other) => other.to_string(),
            };
            tool_calls.push(ToolCall::new(id, name, args));
        }
        let m = Message {
            role,
            content,
            tool_calls,
            tool_call_id: v.get("tool_call_id").and_then(Value::as_str).map(str::to_owned),
        };
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
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "stream": self.config.stream,
        });
        if !tools.is_empty() {
            body["tools"] = tools
                .iter()
                .map(|t| json!({ "type": "function", "function": t }))
                .collect();
        }
        Ok(body)
    }

    fn from_wire(&self, response: &Value) -> Result<Message, ProviderError> {
        let m = response
            .pointer("/choices/0/message")
            .ok_or_else(|| malformed("response has no choices[0].message"))?;
        self.decode_message(m)
    }

    async fn send(&self, request: Value, on_token: TokenSink<'_>) -> Result<Message, ProviderError> {
        let mut req = self
            .http
            .post(format!("{}/chat/completions", self.config.base_url))
            .json(&request);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| self.transport(e))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(ProviderError::status(status.as_u16(), &body));
        }
        let streamed = request.get("stream").and_then(Value::as_bool).unwrap_or(false);
        if streamed {
            return self.read_stream(resp, on_token).await;
        }
        let text = resp.text().await.map_err(|e| self.transport(e))?;
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::MalformedResponse(format!("{e}: {}", super::excerpt(&text))))?;
        let m = self.from_wire(&body)?;
        if !m.content.is_empty() {
            on_token(&m.content);
        }
        Ok(m)
    }
}
