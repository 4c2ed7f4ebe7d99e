//! Declaring a tool, the JSON schema generated for it, and argument validation.
//!
//! cargo run -p lore-examples --example tool_schema

use lore_llm::ToolSpec;

fn main() {
    let tool = ToolSpec::new("lookup_sample", "Find a sample in the freezer inventory")
        .required("label", "string", "label printed on the tube")
        .optional("shelf", "integer", "shelf number, top is 1")
        .optional("order", "enum(newest,oldest)", "sort order")
        .optional("tags", "array<string>", "")
        .descriptor()
        .expect("well-formed tool");
    println!("{}", serde_json::to_string_pretty(&tool.json_schema()).unwrap());

    for raw in [
        r#"{"label": "A-17", "shelf": 2, "tags": ["rna"]}"#,
        r#"{"shelf": 2}"#,
        r#"{"label": 17}"#,
        r#"{"label": "A-17", "colour": "blue"}"#,
        r#"{"label": "A-17", "order": "random"}"#,
        r#"{"label": "A-17""#,
    ] {
        match tool.validate(raw) {
            Ok(args) => println!("ok      {raw}  ->  {}", args.to_json()),
            Err(e) => println!("reject  {raw}  ->  {e}"),
        }
    }
}
