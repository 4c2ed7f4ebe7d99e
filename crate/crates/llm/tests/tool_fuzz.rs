use lore_llm::{ToolDescriptor, ToolSpec, ValidationError};
use lore_testkit::fuzz::{mutate, satisfies, valid_payload, MutationClass};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{Map, Value};

const PER_CLASS: usize = 100;

fn tools() -> Vec<ToolDescriptor> {
    [
        ToolSpec::new("search", "hybrid search")
            .required("query", "string", "text to look for")
            .required("k", "integer", "number of chunks"),
        ToolSpec::new("filter", "every parameter type")
            .optional("tags", "array<string>", "")
            .required("order", "enum(asc,desc,relevance)", "")
            .optional("limit", "integer", "")
            .optional("threshold", "number", "")
            .optional("exact", "boolean", ""),
        ToolSpec::new("stats", "numeric")
            .required("values", "array<integer>", "")
            .required("scale", "number", "")
            .optional("flags", "array<boolean>", "")
            .optional("weights", "array<number>", ""),
        ToolSpec::new("ping", "no parameters"),
    ]
    .iter()
    .map(|s| s.descriptor().unwrap())
    .collect()
}

fn class_of(e: &ValidationError) -> MutationClass {
    match e {
        ValidationError::MalformedJson(_) => MutationClass::MalformedJson,
        ValidationError::MissingRequired(_) => MutationClass::MissingRequired,
        ValidationError::TypeMismatch { .. } => MutationClass::Retyped,
        ValidationError::UnknownField(_) => MutationClass::UnknownField,
        ValidationError::EnumOutOfRange { .. } => panic!("fuzzer never produces out-of-range enums"),
    }
}

fn without_nulls(v: &Value) -> Value {
    let m: Map<String, Value> = v
        .as_object()
        .unwrap()
        .iter()
        .filter(|(_, x)| !x.is_null())
        .map(|(k, x)| (k.clone(), x.clone()))
        .collect();
    Value::Object(m)
}

/// Structural equality with numbers compared by value, since `number`
/// parameters come back as floats.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn valid_payloads_are_accepted_and_typed() {
    let mut rng = StdRng::seed_from_u64(7);
    for d in tools() {
        let schema = d.json_schema();
        for _ in 0..PER_CLASS {
            let payload = valid_payload(&schema, &mut rng);
            assert!(satisfies(&schema, &payload));
            let text = payload.to_string();
            let args = d
                .validate(&text)
                .unwrap_or_else(|e| panic!("{}: {payload} rejected: {e}", d.name));
            let sent: Value = serde_json::from_str(&text).unwrap();
            assert!(same(&args.to_json(), &without_nulls(&sent)), "{}: {payload}", d.name);
        }
    }
}

#[test]
fn every_mutation_class_is_rejected_with_its_error() {
    let mut rng = StdRng::seed_from_u64(11);
    for d in tools() {
        let schema = d.json_schema();
        for class in MutationClass::ALL {
            let mut produced = 0;
            for _ in 0..PER_CLASS {
                let base = valid_payload(&schema, &mut rng);
                let Some(m) = mutate(&schema, &base, class, &mut rng) else {
                    continue;
                };
                produced += 1;
                let err = d
                    .validate(&m.payload)
                    .expect_err(&format!("{} accepted {:?} mutant {}", d.name, class, m.payload));
                assert_eq!(class_of(&err), class, "{}: {} -> {err}", d.name, m.payload);
                match (&err, &m.field) {
                    (ValidationError::MissingRequired(f), Some(want))
                    | (ValidationError::UnknownField(f), Some(want))
                    | (ValidationError::TypeMismatch { name: f, .. }, Some(want)) => assert_eq!(f, want),
                    _ => {}
                }
            }
            let applicable = match class {
                MutationClass::MissingRequired => d.parameters.iter().any(|p| p.required),
                MutationClass::Retyped => !d.parameters.is_empty(),
                _ => true,
            };
            assert_eq!(produced, if applicable { PER_CLASS } else { 0 }, "{} {:?}", d.name, class);
        }
    }
}

#[test]
fn schema_is_closed_and_lists_required() {
    let d = &tools()[1];
    let s = d.json_schema();
    assert_eq!(s["additionalProperties"], Value::Bool(false));
    assert_eq!(s["required"], serde_json::json!(["order"]));
    assert_eq!(s["properties"]["order"]["enum"], serde_json::json!(["asc", "desc", "relevance"]));
    assert_eq!(s["properties"]["tags"]["items"]["type"], "string");
}

fn arb_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        (-5i64..5).prop_map(Value::from),
        (-5.0f64..5.0).prop_map(Value::from),
        prop::sample::select(vec!["asc", "desc", "relevance", "up", "", "x"]).prop_map(Value::from),
    ];
    leaf.prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Value::Array),
            prop::collection::btree_map("[a-z]{1,3}", inner, 0..2).prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn arb_payload() -> impl Strategy<Value = Value> {
    let key = prop::sample::select(vec![
        "query", "k", "tags", "order", "limit", "threshold", "exact", "values", "scale", "flags", "weights", "other",
    ]);
    prop::collection::btree_map(key, arb_value(), 0..6)
        .prop_map(|m| Value::Object(m.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    /// Accepted exactly when the independent schema check says the payload conforms.
    #[test]
    fn acceptance_matches_schema(payload in arb_payload(), tool in 0usize..4) {
        let d = &tools()[tool];
        let accepted = d.validate(&payload.to_string());
        prop_assert_eq!(accepted.is_ok(), satisfies(&d.json_schema(), &payload), "{} {:?}", payload, accepted);
    }
}
