//! The OpenAI-compatible adapter, streaming a completion. Talks to an
//! in-process mock unless OPENAI_BASE_URL and OPENAI_MODEL are set
//! (OPENAI_API_KEY is sent when present).
//!
//! cargo run -p lore-examples --example openai_chat

use lore_llm::{complete, Conversation, Message, OpenAiAdapter, OpenAiConfig};
use lore_testkit::openai::{MockOpenAi, MockReply};

#[tokio::main]
async fn main() {
    let mock;
    let config = match (std::env::var("OPENAI_BASE_URL"), std::env::var("OPENAI_MODEL")) {
        (Ok(url), Ok(model)) => OpenAiConfig {
            api_key: std::env::var("OPENAI_API_KEY").ok(),
            ..OpenAiConfig::new(url, model)
        },
        _ => {
            mock = MockOpenAi::start(vec![MockReply::text("Centrifuges separate by density.")]).await;
            OpenAiConfig::new(mock.base_url(), "mock-model")
        }
    };
    println!("model {} at {}", config.model, config.base_url);
    let adapter = OpenAiAdapter::new(config);

    let mut conv = Conversation::new("Answer in one sentence.");
    conv.push(Message::user("What does a centrifuge do?"));
    let on_token = |t: &str| println!("token {t:?}");
    match complete(&conv, &[], &adapter, &on_token).await {
        Ok(reply) => println!("reply: {}", reply.content),
        Err(e) => println!("failed: {e}"),
    }
}
