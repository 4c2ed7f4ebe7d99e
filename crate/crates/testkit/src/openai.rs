//! OpenAI-compatible `/v1/chat/completions` and `/v1/embeddings` with
//! scripted replies. Streaming requests get the reply as SSE deltas.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::{serve, Served};

#[derive(Debug, Clone)]
pub struct MockToolCall {
    pub id: String,
    pub name: String,
    pub arguments: String,
}

#[derive(Debug, Clone)]
pub enum MockReply {
    Message {
        content: Option<String>,
        tool_calls: Vec<MockToolCall>,
    },
    Status { code: u16, body: String },
    /// Sleeps before answering with the inner reply.
    Delayed(Duration, Box<MockReply>),
    /// A 200 with a body that is not a completion.
    Garbage(String),
}

impl MockReply {
    pub fn text(content: &str) -> Self {
        MockReply::Message {
            content: Some(content.to_owned()),
            tool_calls: Vec::new(),
        }
    }

    pub fn tool_call(id: &str, name: &str, arguments: Value) -> Self {
        MockReply::Message {
            content: None,
            tool_calls: vec![MockToolCall {
                id: id.to_owned(),
                name: name.to_owned(),
                arguments: arguments.to_string(),
            }],
        }
    }
}

#[derive(Default)]
struct Inner {
    replies: Mutex<VecDeque<MockReply>>,
    requests: Mutex<Vec<Value>>,
    embed_dim: usize,
}

pub struct MockOpenAi {
    inner: Arc<Inner>,
    served: Served,
}

impl MockOpenAi {
    pub async fn start(replies: Vec<MockReply>) -> Self {
        Self::start_with_dim(replies, 16).await
    }

    pub async fn start_with_dim(replies: Vec<MockReply>, embed_dim: usize) -> Self {
        let inner = Arc::new(Inner {
            replies: Mutex::new(replies.into()),
            requests: Mutex::default(),
            embed_dim,
        });
        let router = Router::new()
            .route("/v1/chat/completions", post(chat))
            .route("/v1/embeddings", post(embeddings))
            .with_state(inner.clone());
        MockOpenAi {
            inner,
            served: serve(router).await,
        }
    }

    /// Base URL including `/v1`.
    pub fn base_url(&self) -> String {
        format!("{}/v1", self.served.url())
    }

    pub fn push(&self, reply: MockReply) {
        self.inner.replies.lock().unwrap().push_back(reply);
    }

    /// Request bodies received so far, chat and embeddings alike.
    pub fn requests(&self) -> Vec<Value> {
        self.inner.requests.lock().unwrap().clone()
    }
}

async fn chat(State(inner): State<Arc<Inner>>, Json(body): Json<Value>) -> Response {
    let stream = body.get("stream").and_then(Value::as_bool).unwrap_or(false);
    inner.requests.lock().unwrap().push(body);
    let next = inner.replies.lock().unwrap().pop_front();
    let mut reply = match next {
        Some(r) => r,
        None => {
            return (StatusCode::INTERNAL_SERVER_ERROR, r#"{"error":{"message":"script exhausted"}}"#).into_response()
        }
    };
    while let MockReply::Delayed(d, inner_reply) = reply {
        tokio::time::sleep(d).await;
        reply = *inner_reply;
    }
    match reply {
        MockReply::Status { code, body } => {
            (StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), body).into_response()
        }
        MockReply::Garbage(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        MockReply::Message { content, tool_calls } if stream => sse(content, &tool_calls),
        MockReply::Message { content, tool_calls } => {
            let finish = if tool_calls.is_empty() { "stop" } else { "tool_calls" };
            let mut message = json!({ "role": "assistant", "content": content });
            if !tool_calls.is_empty() {
                message["tool_calls"] = tool_calls
                    .iter()
                    .map(|c| json!({"id": c.id, "type": "function", "function": {"name": c.name, "arguments": c.arguments}}))
                    .collect();
            }
            Json(json!({
                "id": "chatcmpl-mock",
                "object": "chat.completion",
                "choices": [{ "index": 0, "message": message, "finish_reason": finish }],
            }))
            .into_response()
        }
        MockReply::Delayed(..) => unreachable!(),
    }
}

fn sse(content: Option<String>, tool_calls: &[MockToolCall]) -> Response {
    let mut events = vec![json!({"choices": [{"index": 0, "delta": {"role": "assistant"}}]})];
    if let Some(text) = content {
        let chars: Vec<char> = text.chars().collect();
        for piece in chars.chunks(4) {
            let piece: String = piece.iter().collect();
            events.push(json!({"choices": [{"index": 0, "delta": {"content": piece}}]}));
        }
    }
    for (i, call) in tool_calls.iter().enumerate() {
        events.push(json!({"choices": [{"index": 0, "delta": {"tool_calls": [
            {"index": i, "id": call.id, "type": "function", "function": {"name": call.name, "arguments": ""}}
        ]}}]}));
        let chars: Vec<char> = call.arguments.chars().collect();
        for piece in chars.chunks(5) {
            let piece: String = piece.iter().collect();
            events.push(json!({"choices": [{"index": 0, "delta": {"tool_calls": [
                {"index": i, "function": {"arguments": piece}}
            ]}}]}));
        }
    }
    let finish = if tool_calls.is_empty() { "stop" } else { "tool_calls" };
    events.push(json!({"choices": [{"index": 0, "delta": {}, "finish_reason": finish}]}));
    let mut body: String = events.iter().map(|e| format!("data: {e}\n\n")).collect();
    body.push_str("data: [DONE]\n\n");
    ([(header::CONTENT_TYPE, "text/event-stream")], body).into_response()
}

/// Letter-frequency vectors. Deterministic, not normalized.
async fn embeddings(State(inner): State<Arc<Inner>>, Json(body): Json<Value>) -> Response {
    inner.requests.lock().unwrap().push(body.clone());
    let inputs: Vec<String> = match &body["input"] {
        Value::String(s) => vec![s.clone()],
        Value::Array(items) => items.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect(),
        _ => return (StatusCode::BAD_REQUEST, "input must be a string or array").into_response(),
    };
    let dim = inner.embed_dim.max(1);
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let mut v = vec![0f32; dim];
            for c in text.chars().filter(|c| c.is_alphanumeric()) {
                v[c as usize % dim] += 1.0;
            }
            json!({ "object": "embedding", "index": i, "embedding": v })
        })
        .rev()
        .collect();
    Json(json!({ "object": "list", "data": data, "model": body["model"] })).into_response()
}
