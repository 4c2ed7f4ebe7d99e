//! Message corpus in canonical JSON form, covering every role and the
//! tool-call shapes each role may carry.

use serde_json::{json, Value};

const TEXTS: &[&str] = &[
    "",
    "hello",
    "multi\nline\n\ttext",
    "quotes \" and \\ backslashes",
    "unicode: naïve 日本語 🙂",
    "   padded   ",
    "{\"looks\": \"like json\"}",
];

const ARGS: &[&str] = &[
    "{}",
    r#"{"query":"attention","k":3}"#,
    r#"{"query":"x y","k":20,"tags":["a","b"]}"#,
    r#"{ "spaced" : true }"#,
    r#"{"q":"naïve \"quoted\""}"#,
];

fn call(i: usize, n: usize) -> Value {
    let name = ["search_collections", "echo", "lookup"][n % 3];
    json!({
        "id": format!("call_{i}_{n}"),
        "name": name,
        "raw_arguments": ARGS[(i + n) % ARGS.len()],
    })
}

/// Every role with assorted texts, assistant messages with 0 to 3 tool calls
/// (with and without content) and tool results linked by id.
pub fn canonical_messages() -> Vec<Value> {
    let mut out = Vec::new();
    for (i, text) in TEXTS.iter().enumerate() {
        out.push(json!({"role": "system", "content": text}));
        out.push(json!({"role": "user", "content": text}));
        out.push(json!({"role": "assistant", "content": text}));
        out.push(json!({"role": "tool", "content": text, "tool_call_id": format!("call_{i}_0")}));
        for calls in 1..=3 {
            let tool_calls: Vec<Value> = (0..calls).map(|n| call(i, n)).collect();
            out.push(json!({"role": "assistant", "content": "", "tool_calls": tool_calls}));
            if !text.is_empty() {
                out.push(json!({"role": "assistant", "content": text, "tool_calls": tool_calls}));
            }
        }
    }
    out
}

/// Messages violating per-role field rules; adapters must refuse to encode them.
pub fn inexpressible_messages() -> Vec<Value> {
    vec![
        json!({"role": "tool", "content": "orphan result"}),
        json!({"role": "user", "content": "hi", "tool_calls": [call(0, 0)]}),
        json!({"role": "system", "content": "s", "tool_calls": [call(1, 0)]}),
        json!({"role": "tool", "content": "r", "tool_call_id": "c", "tool_calls": [call(2, 0)]}),
        json!({"role": "user", "content": "hi", "tool_call_id": "c"}),
        json!({"role": "assistant", "content": "a", "tool_call_id": "c"}),
    ]
}
