//! The HTTP and WebSocket service in-process: create a collection, upload a
//! note, search it, then chat over the socket.
//!
//! cargo run -p lore-examples --example http_service

use std::sync::Arc;

use futures::{SinkExt, StreamExt};
use lore_agent::AgentConfig;
use lore_examples::memory_ingestor;
use lore_llm::{ScriptedProvider, Turn};
use lore_server::App;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

#[tokio::main]
async fn main() {
    let provider = Arc::new(ScriptedProvider::from_turns(vec![
        Turn::tool_call("search", json!({"query": "rotor swap", "k": 1})),
        Turn::text("The rotor was swapped; speed drifted two percent."),
    ]));
    let app = App::new(memory_ingestor(), provider, AgentConfig::default()).unwrap();
    let ada = app.model().ensure_principal("ada").unwrap().id;
    let token = app.tokens.create(ada).unwrap();

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, lore_server::api::router(app)).await });
    let base = format!("http://{addr}");
    let http = reqwest::Client::new();
    println!("serving on {base}");

    let coll: Value = http
        .post(format!("{base}/collections"))
        .bearer_auth(&token)
        .json(&json!({"name": "lab"}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("POST /collections -> {coll}");
    let id = coll["id"].as_i64().unwrap();

    let form = reqwest::multipart::Form::new()
        .part(
            "file",
            reqwest::multipart::Part::bytes(b"Rotor swap on Monday; spin speed drifted two percent.".to_vec()).file_name("log.txt"),
        )
        .text("kind", "note")
        .text("title", "centrifuge log")
        .text("collection_id", id.to_string());
    let doc: Value = http
        .post(format!("{base}/documents"))
        .bearer_auth(&token)
        .multipart(form)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("POST /documents -> document {} with {} chunks", doc["id"], doc["chunk_count"]);

    let hits: Value = http
        .post(format!("{base}/search"))
        .bearer_auth(&token)
        .json(&json!({"query": "spin speed", "collection_ids": [id], "k": 3}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("POST /search -> {} hits, best {:.3}", hits["hits"].as_array().unwrap().len(), hits["hits"][0]["fused_score"]);

    let unauthorized = http.get(format!("{base}/collections")).send().await.unwrap();
    println!("GET /collections without a token -> {}", unauthorized.status());

    let url = format!("ws://{addr}/ws/chat?token={token}&collection_ids={id}");
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    ws.send(Message::Text(json!({"type": "user_message", "text": "What happened to the centrifuge?"}).to_string()))
        .await
        .unwrap();
    while let Some(Ok(Message::Text(frame))) = ws.next().await {
        println!("ws <- {frame}");
        let v: Value = serde_json::from_str(&frame).unwrap();
        if v["type"] == "final" || v["type"] == "error" {
            break;
        }
    }
}
