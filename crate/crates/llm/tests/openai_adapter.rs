use std::sync::Mutex;
use std::time::Duration;

use lore_llm::{
    complete, CompletionError, Conversation, Message, OpenAiAdapter, OpenAiConfig, ProviderAdapter, ProviderError,
    ToolCall, ToolSpec,
};
use lore_testkit::openai::{MockOpenAi, MockReply};
use serde_json::json;

fn adapter(mock: &MockOpenAi, stream: bool) -> OpenAiAdapter {
    let mut cfg = OpenAiConfig::new(mock.base_url(), "tiny");
    cfg.stream = stream;
    cfg.api_key = Some("sk-test".into());
    cfg.timeout = Duration::from_millis(500);
    OpenAiAdapter::new(cfg)
}

fn conv() -> Conversation {
    let mut c = Conversation::new("You are terse.");
    c.push(Message::user("what is attention?"));
    c
}

#[tokio::test]
async fn plain_and_streamed_text() {
    let mock = MockOpenAi::start(vec![MockReply::text("Attention weighs tokens."), MockReply::text("Attention weighs tokens.")]).await;
    for stream in [false, true] {
        let a = adapter(&mock, stream);
        assert_eq!(a.supports_streaming(), stream);
        let tokens = Mutex::new(Vec::<String>::new());
        let m = complete(&conv(), &[], &a, &|t| tokens.lock().unwrap().push(t.into()))
            .await
            .unwrap();
        assert_eq!(m, Message::assistant("Attention weighs tokens."));
        let tokens = tokens.into_inner().unwrap();
        assert_eq!(tokens.concat(), "Attention weighs tokens.");
        if stream {
            assert!(tokens.len() > 1);
        }
    }
    let reqs = mock.requests();
    assert_eq!(reqs[0]["model"], "tiny");
    assert_eq!(reqs[0]["stream"], false);
    assert_eq!(reqs[1]["stream"], true);
    assert_eq!(reqs[0]["messages"][0], json!({"role": "system", "content": "You are terse."}));
    assert!(reqs[0].get("tools").is_none());
}

#[tokio::test]
async fn tool_calls_both_modes() {
    let args = json!({"query": "multi-head attention", "k": 3});
    let mock = MockOpenAi::start(vec![
        MockReply::tool_call("call_a", "search", args.clone()),
        MockReply::tool_call("call_b", "search", args.clone()),
    ])
    .await;
    let tools = vec![ToolSpec::new("search", "find chunks")
        .required("query", "string", "")
        .required("k", "integer", "")
        .descriptor()
        .unwrap()];
    for (stream, id) in [(false, "call_a"), (true, "call_b")] {
        let m = complete(&conv(), &tools, &adapter(&mock, stream), &|_| {}).await.unwrap();
        assert_eq!(m.content, "");
        assert_eq!(m.tool_calls, vec![ToolCall::new(id, "search", args.to_string())]);
    }
    let tools_wire = &mock.requests()[0]["tools"][0];
    assert_eq!(tools_wire["type"], "function");
    assert_eq!(tools_wire["function"]["name"], "search");
    assert_eq!(tools_wire["function"]["parameters"]["required"], json!(["query", "k"]));
}

#[tokio::test]
async fn follow_up_carries_tool_results() {
    let mock = MockOpenAi::start(vec![MockReply::text("done")]).await;
    let mut c = conv();
    c.push(Message::assistant_tool_calls("", vec![ToolCall::new("c1", "search", "{}")]));
    c.push(Message::tool("c1", r#"{"chunks":[]}"#));
    complete(&c, &[], &adapter(&mock, false), &|_| {}).await.unwrap();
    let msgs = &mock.requests()[0]["messages"];
    assert_eq!(msgs[2]["tool_calls"][0]["id"], "c1");
    assert_eq!(msgs[2]["content"], serde_json::Value::Null);
    assert_eq!(msgs[3], json!({"role": "tool", "content": r#"{"chunks":[]}"#, "tool_call_id": "c1"}));
}

#[tokio::test]
async fn failures_map_to_provider_errors() {
    let mock = MockOpenAi::start(vec![
        MockReply::Status { code: 429, body: "x".repeat(2000) },
        MockReply::Garbage("{\"unexpected\": true}".into()),
        MockReply::Garbage("not json".into()),
        MockReply::Delayed(Duration::from_secs(3), Box::new(MockReply::text("late"))),
    ])
    .await;
    let a = adapter(&mock, false);
    match complete(&conv(), &[], &a, &|_| {}).await.unwrap_err() {
        CompletionError::Provider(ProviderError::Status { status, body }) => {
            assert_eq!(status, 429);
            assert!(body.len() < 600);
        }
        e => panic!("{e:?}"),
    }
    for _ in 0..2 {
        assert!(matches!(
            complete(&conv(), &[], &a, &|_| {}).await.unwrap_err(),
            CompletionError::Provider(ProviderError::MalformedResponse(_))
        ));
    }
    assert!(matches!(
        complete(&conv(), &[], &a, &|_| {}).await.unwrap_err(),
        CompletionError::Provider(ProviderError::Timeout(_))
    ));
}

#[tokio::test]
async fn unreachable_server_is_transport_error() {
    let a = OpenAiAdapter::new(OpenAiConfig::new("http://127.0.0.1:1/v1", "m"));
    assert!(matches!(
        complete(&conv(), &[], &a, &|_| {}).await.unwrap_err(),
        CompletionError::Provider(ProviderError::Transport(_))
    ));
}
