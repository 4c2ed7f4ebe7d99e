mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{set, start, Server};
use futures::{SinkExt, StreamExt};
use jsonschema::JSONSchema;
use lore_agent::{check_turn_grammar, ChatEvent, ChunkRef, SNIPPET_CHARS};
use lore_core::index::FusionWeights;
use lore_core::ingest::Source;
use lore_core::model::{DocumentKind, PermissionLevel};
use lore_core::{CollectionId, PrincipalId};
use lore_llm::{ProviderAdapter, ScriptedProvider, Turn};
use lore_testkit::fixtures::{lorem, CORPUS};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::client::IntoClientRequest;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Lib {
    s: Server,
    alice: (PrincipalId, String),
    bob: (PrincipalId, String),
    papers: CollectionId,
    misc: CollectionId,
}

async fn note(s: &Server, c: CollectionId, who: PrincipalId, title: &str, text: &str) {
    let source = Source::Upload {
        bytes: text.as_bytes().to_vec(),
        kind: DocumentKind::Note,
        media_type: None,
    };
    s.app.ingestor.ingest_document(source, c, Some(title.into()), who).await.unwrap();
}

async fn library(provider: Arc<dyn ProviderAdapter>) -> Lib {
    let s = start(common::app(provider, None, 8)).await;
    let alice = s.user("alice");
    let bob = s.user("bob");
    let papers = s.model().create_collection("papers", alice.0, None).unwrap().id;
    let misc = s.model().create_collection("misc", alice.0, None).unwrap().id;
    for (title, text) in CORPUS {
        note(&s, papers, alice.0, title, text).await;
    }
    for seed in 0..3 {
        note(&s, misc, alice.0, &format!("filler {seed}"), &lorem(seed, 60)).await;
    }
    Lib {
        s,
        alice,
        bob,
        papers,
        misc,
    }
}

fn schema() -> JSONSchema {
    let raw: Value = serde_json::from_str(lore_server::CHAT_EVENT_SCHEMA).unwrap();
    JSONSchema::compile(&raw).unwrap()
}

fn assert_valid(schema: &JSONSchema, frame: &Value) {
    if let Err(errors) = schema.validate(frame) {
        let all: Vec<String> = errors.map(|e| e.to_string()).collect();
        panic!("frame {frame} violates the schema: {all:?}");
    }
}

async fn connect(url: &str) -> Socket {
    connect_async(url).await.unwrap().0
}

enum Next {
    Event(ChatEvent),
    Closed(Option<u16>),
}

async fn next(ws: &mut Socket, schema: &JSONSchema) -> Next {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("no frame within 10s");
        match msg {
            None | Some(Err(_)) => return Next::Closed(None),
            Some(Ok(Message::Close(frame))) => return Next::Closed(frame.map(|f| u16::from(f.code))),
            Some(Ok(Message::Text(t))) => {
                let v: Value = serde_json::from_str(&t).unwrap();
                assert_valid(schema, &v);
                return Next::Event(serde_json::from_value(v).unwrap());
            }
            Some(Ok(_)) => continue,
        }
    }
}

async fn event(ws: &mut Socket, schema: &JSONSchema) -> ChatEvent {
    match next(ws, schema).await {
        Next::Event(e) => e,
        Next::Closed(code) => panic!("socket closed ({code:?}) while waiting for an event"),
    }
}

/// Events up to and including the first terminal one.
async fn turn(ws: &mut Socket, schema: &JSONSchema) -> Vec<ChatEvent> {
    let mut out = Vec::new();
    loop {
        let e = event(ws, schema).await;
        let done = e.is_terminal();
        out.push(e);
        if done {
            return out;
        }
    }
}

async fn say(ws: &mut Socket, frame: Value) {
    ws.send(Message::Text(frame.to_string())).await.unwrap();
}

async fn ask(ws: &mut Socket, text: &str) {
    say(ws, json!({"type": "user_message", "text": text})).await;
}

async fn close_code(url: &str, schema: &JSONSchema) -> Option<u16> {
    let mut ws = connect(url).await;
    match next(&mut ws, schema).await {
        Next::Closed(code) => code,
        Next::Event(e) => panic!("expected a close, got {e:?}"),
    }
}

fn refs(hits: &[lore_core::index::ChunkHit]) -> Vec<ChunkRef> {
    hits.iter()
        .map(|h| ChunkRef {
            document_id: h.document_id,
            chunk_id: h.chunk_id,
            title: h.document_title.clone(),
            snippet: h.snippet.chars().take(SNIPPET_CHARS).collect(),
        })
        .collect()
}

#[tokio::test]
async fn scripted_session_frames_match_fixture() {
    let provider = Arc::new(ScriptedProvider::from_turns(vec![
        Turn::tool_call("search", json!({"query": "multi-head attention layers", "k": 3})),
        Turn::text("answer"),
    ]));
    let lib = library(provider).await;
    let schema = schema();
    let mut ws = connect(&lib.s.ws_url(&format!("collection_ids={}&token={}", lib.papers, lib.alice.1))).await;
    ask(&mut ws, "How does attention work?").await;
    let events = turn(&mut ws, &schema).await;

    let hits = lib
        .s
        .app
        .index()
        .hybrid_search("multi-head attention layers", &set(&[lib.papers]), lib.alice.0, FusionWeights::default().with_k(3))
        .await
        .unwrap();
    assert_eq!(hits.len(), 3);
    assert_eq!(
        events,
        vec![
            ChatEvent::ToolCall {
                name: "search".into(),
                arguments: json!({"query": "multi-head attention layers", "k": 3})
            },
            ChatEvent::ToolResult {
                name: "search".into(),
                chunk_refs: refs(&hits)
            },
            ChatEvent::Token { text: "answer".into() },
            ChatEvent::Final { message_id: 4 },
        ]
    );
}

#[tokio::test]
async fn header_token_works_too() {
    let lib = library(Arc::new(ScriptedProvider::always(Turn::text("hi")))).await;
    let schema = schema();
    let mut req = lib.s.ws_url(&format!("collection_ids={}", lib.papers)).into_client_request().unwrap();
    req.headers_mut()
        .insert("authorization", format!("Bearer {}", lib.alice.1).parse().unwrap());
    let (mut ws, _) = connect_async(req).await.unwrap();
    ask(&mut ws, "hello").await;
    let events = turn(&mut ws, &schema).await;
    assert_eq!(events, vec![ChatEvent::Token { text: "hi".into() }, ChatEvent::Final { message_id: 2 }]);
}

#[tokio::test]
async fn second_message_during_a_turn_is_refused() {
    let lib = library(Arc::new(ScriptedProvider::always(Turn::text("slow reply").delayed(400)))).await;
    let schema = schema();
    let mut ws = connect(&lib.s.ws_url(&format!("token={}", lib.alice.1))).await;
    ask(&mut ws, "first").await;
    ask(&mut ws, "second").await;
    match event(&mut ws, &schema).await {
        ChatEvent::Error { code, .. } => assert_eq!(code, "CONCURRENT_TURN"),
        other => panic!("expected CONCURRENT_TURN, got {other:?}"),
    }
    let first = turn(&mut ws, &schema).await;
    check_turn_grammar(&first).unwrap();
    assert_eq!(first.last(), Some(&ChatEvent::Final { message_id: 2 }));
    // idle again: the next message starts a new turn
    ask(&mut ws, "third").await;
    let third = turn(&mut ws, &schema).await;
    assert_eq!(third.last(), Some(&ChatEvent::Final { message_id: 4 }));
}

#[tokio::test]
async fn bad_frames_get_an_error_and_keep_the_socket() {
    let lib = library(Arc::new(ScriptedProvider::always(Turn::text("fine")))).await;
    let schema = schema();
    let mut ws = connect(&lib.s.ws_url(&format!("token={}", lib.alice.1))).await;
    let bad = [
        "not json".to_owned(),
        json!({"type": "user_message"}).to_string(),
        json!({"type": "user_message", "text": ""}).to_string(),
        json!({"type": "shout", "text": "x"}).to_string(),
        json!({"type": "user_message", "text": "x", "extra": true}).to_string(),
        json!({"type": "user_message", "text": "x", "collection_ids": ["a"]}).to_string(),
    ];
    for frame in bad {
        ws.send(Message::Text(frame.clone())).await.unwrap();
        match event(&mut ws, &schema).await {
            ChatEvent::Error { code, .. } => assert_eq!(code, "BAD_FRAME", "{frame}"),
            other => panic!("{frame}: {other:?}"),
        }
    }
    ws.send(Message::Binary(vec![1, 2, 3])).await.unwrap();
    assert!(matches!(event(&mut ws, &schema).await, ChatEvent::Error { code, .. } if code == "BAD_FRAME"));
    ask(&mut ws, "still there?").await;
    let events = turn(&mut ws, &schema).await;
    assert_eq!(events, vec![ChatEvent::Token { text: "fine".into() }, ChatEvent::Final { message_id: 2 }]);
}

#[tokio::test]
async fn session_open_failures_close_with_codes() {
    let lib = library(Arc::new(ScriptedProvider::always(Turn::text("x")))).await;
    let schema = schema();
    let s = &lib.s;
    assert_eq!(close_code(&s.ws_url(""), &schema).await, Some(4401));
    assert_eq!(close_code(&s.ws_url("token=nope"), &schema).await, Some(4401));
    let revoked = s.app.tokens.create(lib.alice.0).unwrap();
    assert!(s.app.tokens.revoke(&revoked).unwrap());
    assert_eq!(close_code(&s.ws_url(&format!("token={revoked}")), &schema).await, Some(4401));
    let bob = &lib.bob.1;
    assert_eq!(
        close_code(&s.ws_url(&format!("token={bob}&collection_ids={}", lib.papers)), &schema).await,
        Some(4403)
    );
    assert_eq!(close_code(&s.ws_url(&format!("token={bob}&collection_ids=9999")), &schema).await, Some(4404));
    assert_eq!(close_code(&s.ws_url(&format!("token={bob}&collection_ids=1,x")), &schema).await, Some(4400));
    // with a grant the same session opens
    s.model()
        .grant_permission(lib.papers, lib.bob.0, PermissionLevel::View, lib.alice.0)
        .unwrap();
    let mut ws = connect(&s.ws_url(&format!("token={bob}&collection_ids={}", lib.papers))).await;
    ask(&mut ws, "hello").await;
    assert_eq!(turn(&mut ws, &schema).await.len(), 2);
}

#[tokio::test]
async fn provider_failure_is_an_event_not_a_close() {
    let provider = Arc::new(ScriptedProvider::from_turns(vec![
        Turn::error(503, "upstream overloaded"),
        Turn::text("recovered"),
    ]));
    let lib = library(provider).await;
    let schema = schema();
    let mut ws = connect(&lib.s.ws_url(&format!("token={}", lib.alice.1))).await;
    ask(&mut ws, "one").await;
    let failed = turn(&mut ws, &schema).await;
    check_turn_grammar(&failed).unwrap();
    assert!(matches!(failed.last(), Some(ChatEvent::Error { code, .. }) if code == "PROVIDER_ERROR"), "{failed:?}");
    ask(&mut ws, "two").await;
    let ok = turn(&mut ws, &schema).await;
    assert_eq!(ok.first(), Some(&ChatEvent::Token { text: "recovered".into() }));
    assert!(matches!(ok.last(), Some(ChatEvent::Final { .. })));
}

#[tokio::test]
async fn frame_selection_overrides_the_session() {
    let provider = Arc::new(ScriptedProvider::always(Turn::tool_call("search", json!({"query": "lorem ipsum", "k": 5}))));
    let lib = library(provider).await;
    let schema = schema();
    let mut ws = connect(&lib.s.ws_url(&format!("token={}&collection_ids={}", lib.alice.1, lib.papers))).await;
    let misc_docs: Vec<_> = lib.s.model().documents_in(lib.misc).unwrap().into_iter().map(|d| d.id).collect();
    say(&mut ws, json!({"type": "user_message", "text": "x", "collection_ids": [lib.misc.0]})).await;
    // first round only; the tool limit ends the turn later
    let events = turn(&mut ws, &schema).await;
    check_turn_grammar(&events).unwrap();
    let ChatEvent::ToolResult { chunk_refs, .. } = &events[1] else {
        panic!("{events:?}")
    };
    assert!(!chunk_refs.is_empty());
    assert!(chunk_refs.iter().all(|r| misc_docs.contains(&r.document_id)));

    // selecting someone else's collection is refused in-band
    let bobs = lib.s.model().create_collection("bobs", lib.bob.0, None).unwrap().id;
    say(&mut ws, json!({"type": "user_message", "text": "x", "collection_ids": [bobs.0]})).await;
    match event(&mut ws, &schema).await {
        ChatEvent::Error { code, .. } => assert_eq!(code, "PERMISSION_DENIED"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_accepts_every_variant_and_rejects_bad_shapes() {
    let schema = schema();
    let chunk = json!({"document_id": 1, "chunk_id": 2, "title": "t", "snippet": "s"});
    let good = [
        json!({"type": "token", "text": ""}),
        json!({"type": "tool_call", "name": "search", "arguments": {"query": "q"}}),
        json!({"type": "tool_call", "name": "search", "arguments": "{not json"}),
        json!({"type": "tool_result", "name": "search", "chunk_refs": []}),
        json!({"type": "tool_result", "name": "search", "chunk_refs": [chunk]}),
        json!({"type": "final", "message_id": 0}),
        json!({"type": "error", "code": "TOOL_LIMIT", "message": "m"}),
    ];
    for v in &good {
        assert_valid(&schema, v);
    }
    let long = "x".repeat(SNIPPET_CHARS + 1);
    let bad = [
        json!({}),
        json!({"type": "token"}),
        json!({"type": "token", "text": 3}),
        json!({"type": "token", "text": "a", "extra": 1}),
        json!({"type": "tool_call", "name": "", "arguments": {}}),
        json!({"type": "tool_call", "name": "search"}),
        json!({"type": "tool_result", "name": "search", "chunk_refs": [{"document_id": 0, "chunk_id": 1, "title": "t", "snippet": "s"}]}),
        json!({"type": "tool_result", "name": "search", "chunk_refs": [{"document_id": 1, "chunk_id": 1, "title": "t", "snippet": long}]}),
        json!({"type": "tool_result", "name": "search", "chunk_refs": [{"document_id": 1, "chunk_id": 1, "title": "t"}]}),
        json!({"type": "final", "message_id": -1}),
        json!({"type": "final", "message_id": 1.5}),
        json!({"type": "error", "code": "lower", "message": "m"}),
        json!({"type": "error", "code": "X"}),
        json!({"type": "shout", "text": "x"}),
    ];
    for v in &bad {
        assert!(!schema.is_valid(v), "accepted {v}");
    }
    // every variant the agent can produce validates
    let produced = [
        ChatEvent::Token { text: "a".into() },
        ChatEvent::ToolCall {
            name: "search".into(),
            arguments: json!({"k": 1}),
        },
        ChatEvent::ToolResult {
            name: "search".into(),
            chunk_refs: vec![ChunkRef {
                document_id: lore_core::DocumentId(1),
                chunk_id: lore_core::ChunkId(1),
                title: "t".into(),
                snippet: "x".repeat(SNIPPET_CHARS),
            }],
        },
        ChatEvent::Final { message_id: 4 },
        ChatEvent::error("PROVIDER_ERROR", "backend said no"),
    ];
    for e in &produced {
        assert_valid(&schema, &serde_json::to_value(e).unwrap());
    }
}
