//! A retrieval-augmented chat turn with a scripted model: the model calls the
//! search tool, reads the results, and answers. Events stream as they happen.
//!
//! cargo run -p lore-examples --example scripted_chat

use std::sync::Arc;

use lore_agent::{Agent, AgentConfig, ChatEvent};
use lore_examples::sample_library;
use lore_llm::{ScriptedProvider, Turn};
use serde_json::json;
use tokio::sync::mpsc;

#[tokio::main]
async fn main() {
    let lib = sample_library().await;
    let provider = Arc::new(ScriptedProvider::from_turns(vec![
        Turn::tool_call("search", json!({"query": "multi-head attention", "k": 2})),
        Turn::text("Multi-head attention attends to several positions at once (see the reading group notes)."),
    ]));
    let agent = Agent::new(lib.ingestor.index().clone(), provider, AgentConfig::default()).unwrap();
    let session = agent.new_session(lib.owner, [lib.notebook].into(), None).unwrap();

    let (tx, mut rx) = mpsc::channel(16);
    let printer = tokio::spawn(async move {
        while let Some(event) = rx.recv().await {
            match &event {
                ChatEvent::ToolResult { chunk_refs, .. } => {
                    println!("tool_result: {} passages", chunk_refs.len());
                    for r in chunk_refs {
                        println!("  [{} / {}] {}", r.document_id, r.chunk_id, r.title);
                    }
                }
                other => println!("{}", serde_json::to_string(other).unwrap()),
            }
        }
    });
    session.run_turn("How does attention work?", &tx).await.unwrap();
    drop(tx);
    printer.await.unwrap();

    println!("conversation:");
    for m in session.conversation().await.messages {
        let text: String = m.content.chars().take(70).collect();
        println!("  {:<9} {text}", m.role.as_str());
    }
}
