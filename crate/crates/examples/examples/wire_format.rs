//! A conversation with a tool round, in canonical form and as each adapter
//! puts it on the wire.
//!
//! cargo run -p lore-examples --example wire_format

use lore_llm::{wire_roundtrip, Conversation, Message, OpenAiAdapter, OpenAiConfig, ProviderAdapter, ScriptedProvider, ToolCall, ToolSpec};

fn main() {
    let search = ToolSpec::new("search", "Search the library")
        .required("query", "string", "")
        .descriptor()
        .unwrap();
    let mut conv = Conversation::new("You are a research assistant.");
    conv.push(Message::user("Anything on quasars?"));
    conv.push(Message::assistant_tool_calls("", vec![ToolCall::new("call_1", "search", r#"{"query":"quasars"}"#)]));
    conv.push(Message::tool("call_1", r#"{"results":[]}"#));
    conv.push(Message::assistant("Nothing in the selected collections."));
    conv.validate().unwrap();

    println!("canonical:");
    for m in &conv.messages {
        println!("  {}", serde_json::to_string(m).unwrap());
    }
    let adapters: Vec<Box<dyn ProviderAdapter>> = vec![
        Box::new(ScriptedProvider::from_turns(vec![])),
        Box::new(OpenAiAdapter::new(OpenAiConfig::new("http://localhost:11434/v1", "llama3"))),
    ];
    for a in &adapters {
        println!("{} request:", a.provider_id());
        println!("{}", serde_json::to_string_pretty(&a.to_wire(&conv, &[search.clone()]).unwrap()).unwrap());
        let lossless = conv.messages.iter().all(|m| wire_roundtrip(a.as_ref(), m).as_ref() == Ok(m));
        println!("round trip is lossless: {lossless}");
    }
}
