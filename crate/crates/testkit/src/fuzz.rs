//! Payload generation for tool-argument fuzzing, driven only by the JSON
//! Schema a tool publishes. Supports the flat subset tools are allowed to
//! declare: primitive properties, arrays of primitives and string enums.

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationClass {
    MissingRequired,
    Retyped,
    UnknownField,
    MalformedJson,
}

impl MutationClass {
    pub const ALL: [MutationClass; 4] = [
        MutationClass::MissingRequired,
        MutationClass::Retyped,
        MutationClass::UnknownField,
        MutationClass::MalformedJson,
    ];
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub class: MutationClass,
    /// Field the mutation targets, when there is one.
    pub field: Option<String>,
    pub payload: String,
}

struct Prop<'a> {
    name: &'a str,
    schema: &'a Value,
    required: bool,
}

fn props(schema: &Value) -> Vec<Prop<'_>> {
    let required: Vec<&str> = schema["required"]
        .as_array()
        .map(|r| r.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    schema["properties"]
        .as_object()
        .map(|p| {
            p.iter()
                .map(|(name, s)| Prop {
                    name,
                    schema: s,
                    required: required.contains(&name.as_str()),
                })
                .collect()
        })
        .unwrap_or_default()
}

const WORDS: &[&str] = &["alpha", "beta", "x", "", "naïve café", "q\"uote", "line\nbreak", "0", "true"];

fn primitive<R: Rng>(ty: &str, rng: &mut R) -> Value {
    match ty {
        "string" => json!(WORDS.choose(rng).unwrap()),
        "integer" => json!(rng.gen_range(-1000i64..1000)),
        "number" => {
            if rng.gen_bool(0.3) {
                json!(rng.gen_range(-50i64..50))
            } else {
                json!(rng.gen_range(-100.0f64..100.0))
            }
        }
        "boolean" => json!(rng.gen_bool(0.5)),
        other => panic!("unsupported primitive {other}"),
    }
}

/// A random value satisfying one property schema.
pub fn value_for<R: Rng>(schema: &Value, rng: &mut R) -> Value {
    if let Some(values) = schema["enum"].as_array() {
        return values.choose(rng).cloned().expect("non-empty enum");
    }
    match schema["type"].as_str() {
        Some("array") => {
            let item = schema["items"]["type"].as_str().expect("array item type");
            let n = rng.gen_range(0..4);
            Value::Array((0..n).map(|_| primitive(item, rng)).collect())
        }
        Some(ty) => primitive(ty, rng),
        None => panic!("property without type: {schema}"),
    }
}

/// A payload accepted by `schema`: every required field plus a random subset
/// of the optional ones.
pub fn valid_payload<R: Rng>(schema: &Value, rng: &mut R) -> Value {
    let mut out = Map::new();
    for p in props(schema) {
        if p.required || rng.gen_bool(0.5) {
            out.insert(p.name.to_owned(), value_for(p.schema, rng));
        }
    }
    Value::Object(out)
}

/// Values that violate `schema` on type grounds. Out-of-range enum strings
/// are excluded (that is a different error).
fn wrong_types(schema: &Value, required: bool) -> Vec<Value> {
    let mut out = vec![json!({"nested": 1})];
    if required {
        out.push(Value::Null);
    }
    let ty = if schema["enum"].is_array() {
        "string"
    } else {
        schema["type"].as_str().unwrap_or_default()
    };
    match ty {
        "string" => out.extend([json!(7), json!(2.5), json!(false), json!(["a"])]),
        "integer" => out.extend([json!("3"), json!(3.5), json!(true), json!([3])]),
        "number" => out.extend([json!("1.5"), json!(false), json!([1.5])]),
        "boolean" => out.extend([json!("true"), json!(1), json!([true])]),
        "array" => {
            out.extend([json!("a,b"), json!(1), json!(true)]);
            let item = schema["items"]["type"].as_str().unwrap_or_default();
            let bad_item = match item {
                "string" => json!(1),
                "boolean" => json!("yes"),
                _ => json!("one"),
            };
            out.push(Value::Array(vec![bad_item]));
        }
        _ => {}
    }
    out
}

/// Applies one mutation of `class` to `valid`. `None` when the schema gives
/// the class nothing to act on (e.g. no required fields to drop).
pub fn mutate<R: Rng>(schema: &Value, valid: &Value, class: MutationClass, rng: &mut R) -> Option<Mutant> {
    let obj = valid.as_object().expect("payload is an object");
    let all = props(schema);
    match class {
        MutationClass::MissingRequired => {
            let p = all.iter().filter(|p| p.required).collect::<Vec<_>>().choose(rng).copied()?;
            let mut m = obj.clone();
            m.remove(p.name);
            Some(Mutant {
                class,
                field: Some(p.name.to_owned()),
                payload: Value::Object(m).to_string(),
            })
        }
        MutationClass::Retyped => {
            let p = all.choose(rng)?;
            let bad = wrong_types(p.schema, p.required).choose(rng).cloned()?;
            let mut m = obj.clone();
            m.insert(p.name.to_owned(), bad);
            Some(Mutant {
                class,
                field: Some(p.name.to_owned()),
                payload: Value::Object(m).to_string(),
            })
        }
        MutationClass::UnknownField => {
            let name = loop {
                let candidate = format!("{}_{}", ["extra", "z", "filter", "K"].choose(rng).unwrap(), rng.gen_range(0..100));
                if all.iter().all(|p| p.name != candidate) {
                    break candidate;
                }
            };
            let mut m = obj.clone();
            m.insert(name.clone(), value_for(&json!({"type": "integer"}), rng));
            Some(Mutant {
                class,
                field: Some(name),
                payload: Value::Object(m).to_string(),
            })
        }
        MutationClass::MalformedJson => {
            let text = valid.to_string();
            let payload = match rng.gen_range(0..5) {
                0 => {
                    let chars: Vec<char> = text.chars().collect();
                    chars[..rng.gen_range(0..chars.len())].iter().collect()
                }
                1 => format!("{text}{}", ["}", ",", " x", "{}"].choose(rng).unwrap()),
                2 => text.replacen('{', "[", 1),
                3 => ["[]", "42", "\"text\"", "null", "true", ""].choose(rng).unwrap().to_string(),
                _ => text.replace('"', "'").replacen('{', "{'", 1),
            };
            Some(Mutant {
                class,
                field: None,
                payload,
            })
        }
    }
}

/// Independent check that `v` satisfies `schema`, treating `null` on an
/// optional field as absent.
pub fn satisfies(schema: &Value, v: &Value) -> bool {
    let Some(obj) = v.as_object() else {
        return false;
    };
    let all = props(schema);
    if obj.keys().any(|k| all.iter().all(|p| p.name != k)) {
        return false;
    }
    all.iter().all(|p| match obj.get(p.name) {
        None | Some(Value::Null) => !p.required,
        Some(x) => fits(p.schema, x),
    })
}

fn fits(schema: &Value, v: &Value) -> bool {
    if let Some(values) = schema["enum"].as_array() {
        return v.is_string() && values.contains(v);
    }
    match schema["type"].as_str() {
        Some("string") => v.is_string(),
        Some("integer") => v.is_i64(),
        Some("number") => v.is_number(),
        Some("boolean") => v.is_boolean(),
        Some("array") => v
            .as_array()
            .is_some_and(|items| items.iter().all(|i| fits(&schema["items"], i))),
        _ => false,
    }
}
