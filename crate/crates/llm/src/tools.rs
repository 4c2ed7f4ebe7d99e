//! Tool declarations, schema generation, argument validation and invocation.
//!
//! Parameter types are a closed set: `string`, `integer`, `number`,
//! `boolean`, `array<T>` of one of those four, and `enum(a,b,...)` of strings.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::future::Future;
use std::panic::AssertUnwindSafe;
use std::sync::Arc;

use futures::future::BoxFuture;
use futures::FutureExt;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::message::{Message, ToolCall};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    String,
    Integer,
    Number,
    Boolean,
}

impl Primitive {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => Primitive::String,
            "integer" => Primitive::Integer,
            "number" => Primitive::Number,
            "boolean" => Primitive::Boolean,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Primitive::String => "string",
            Primitive::Integer => "integer",
            Primitive::Number => "number",
            Primitive::Boolean => "boolean",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        match self {
            Primitive::String => v.is_string(),
            Primitive::Integer => v.is_i64(),
            Primitive::Number => v.is_number(),
            Primitive::Boolean => v.is_boolean(),
        }
    }

    fn convert(self, v: &Value) -> ArgValue {
        match self {
            Primitive::String => ArgValue::String(v.as_str().unwrap_or_default().to_owned()),
            Primitive::Integer => ArgValue::Integer(v.as_i64().unwrap_or_default()),
            Primitive::Number => ArgValue::Number(v.as_f64().unwrap_or_default()),
            Primitive::Boolean => ArgValue::Boolean(v.as_bool().unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamType {
    Primitive(Primitive),
    Array(Primitive),
    Enum(Vec<String>),
}

impl ParamType {
    pub const STRING: ParamType = ParamType::Primitive(Primitive::String);
    pub const INTEGER: ParamType = ParamType::Primitive(Primitive::Integer);
    pub const NUMBER: ParamType = ParamType::Primitive(Primitive::Number);
    pub const BOOLEAN: ParamType = ParamType::Primitive(Primitive::Boolean);

    /// Parses a declaration such as `integer`, `array<string>` or `enum(asc,desc)`.
    pub fn parse(decl: &str) -> Result<Self, String> {
        let decl = decl.trim();
        if let Some(p) = Primitive::parse(decl) {
            return Ok(ParamType::Primitive(p));
        }
        if let Some(inner) = decl.strip_prefix("array<").and_then(|s| s.strip_suffix('>')) {
            return Primitive::parse(inner.trim())
                .map(ParamType::Array)
                .ok_or_else(|| format!("array items must be a primitive type, got {inner:?}"));
        }
        if let Some(inner) = decl.strip_prefix("enum(").and_then(|s| s.strip_suffix(')')) {
            let values: Vec<String> = inner.split(',').map(|v| v.trim().to_owned()).collect();
            if values.iter().any(String::is_empty) {
                return Err("enum values must be non-empty".into());
            }
            let mut dedup = values.clone();
            dedup.sort();
            dedup.dedup();
            if dedup.len() != values.len() {
                return Err("enum values must be distinct".into());
            }
            return Ok(ParamType::Enum(values));
        }
        Err(format!("unsupported parameter type {decl:?}"))
    }

    pub fn json_schema(&self) -> Value {
        match self {
            ParamType::Primitive(p) => json!({ "type": p.as_str() }),
            ParamType::Array(p) => json!({ "type": "array", "items": { "type": p.as_str() } }),
            ParamType::Enum(values) => json!({ "type": "string", "enum": values }),
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamType::Primitive(p) => f.write_str(p.as_str()),
            ParamType::Array(p) => write!(f, "array<{}>", p.as_str()),
            ParamType::Enum(values) => write!(f, "enum({})", values.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub description: String,
    pub required: bool,
}

/// Declaration handed to [`ToolRegistry::register`]. Types are given as
/// strings and checked at registration.
#[derive(Debug, Clone)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    params: Vec<(String, String, String, bool)>,
}

impl ToolSpec {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        ToolSpec {
            name: name.into(),
            description: description.into(),
            params: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, ty: &str, description: &str, required: bool) -> Self {
        self.params.push((name.into(), ty.into(), description.into(), required));
        self
    }

    pub fn required(self, name: &str, ty: &str, description: &str) -> Self {
        self.param(name, ty, description, true)
    }

    pub fn optional(self, name: &str, ty: &str, description: &str) -> Self {
        self.param(name, ty, description, false)
    }

    pub fn descriptor(&self) -> Result<ToolDescriptor, RegistryError> {
        let ident = Regex::new(r"^[A-Za-z_][A-Za-z0-9_-]{0,63}$").unwrap();
        if !ident.is_match(&self.name) {
            return Err(RegistryError::InvalidToolName(self.name.clone()));
        }
        let invalid = |param: &str, reason: String| RegistryError::InvalidParameterDeclaration {
            tool: self.name.clone(),
            param: param.to_owned(),
            reason,
        };
        let mut parameters: Vec<ParamSpec> = Vec::with_capacity(self.params.len());
        for (name, ty, description, required) in &self.params {
            if !ident.is_match(name) {
                return Err(invalid(name, "parameter name is not an identifier".into()));
            }
            if parameters.iter().any(|p| &p.name == name) {
                return Err(invalid(name, "declared twice".into()));
            }
            let ty = ParamType::parse(ty).map_err(|reason| invalid(name, reason))?;
            parameters.push(ParamSpec {
                name: name.clone(),
                ty,
                description: description.clone(),
                required: *required,
            });
        }
        Ok(ToolDescriptor {
            name: self.name.clone(),
            description: self.description.clone(),
            parameters,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParamSpec>,
}

impl ToolDescriptor {
    /// JSON Schema object for the parameters. Closed: unknown fields are not allowed.
    pub fn json_schema(&self) -> Value {
        let mut properties = Map::new();
        for p in &self.parameters {
            let mut s = p.ty.json_schema();
            s["description"] = Value::String(p.description.clone());
            properties.insert(p.name.clone(), s);
        }
        let required: Vec<&str> = self
            .parameters
            .iter()
            .filter(|p| p.required)
            .map(|p| p.name.as_str())
            .collect();
        json!({
            "type": "object",
            "properties": properties,
            "required": required,
            "additionalProperties": false,
        })
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Parses and checks `raw` against the declared parameters.
    ///
    /// Unknown fields are reported before missing ones, then each declared
    /// parameter is checked in declaration order. JSON `null` on an optional
    /// parameter counts as absent.
    pub fn validate(&self, raw: &str) -> Result<ToolArgs, ValidationError> {
        let parsed: Value = serde_json::from_str(raw).map_err(|e| ValidationError::MalformedJson(e.to_string()))?;
        let Value::Object(obj) = parsed else {
            return Err(ValidationError::MalformedJson(format!(
                "expected a JSON object, got {}",
                json_type(&parsed)
            )));
        };
        if let Some(unknown) = obj.keys().find(|k| self.param(k).is_none()) {
            return Err(ValidationError::UnknownField(unknown.clone()));
        }
        let mut out = BTreeMap::new();
        for p in &self.parameters {
            let v = match obj.get(&p.name) {
                None | Some(Value::Null) if !p.required => continue,
                None => return Err(ValidationError::MissingRequired(p.name.clone())),
                Some(v) => v,
            };
            let mismatch = |got: String| ValidationError::TypeMismatch {
                name: p.name.clone(),
                expected: p.ty.to_string(),
                got,
            };
            let value = match &p.ty {
                ParamType::Primitive(prim) if prim.accepts(v) => prim.convert(v),
                ParamType::Primitive(_) => return Err(mismatch(json_type(v).into())),
                ParamType::Array(prim) => {
                    let Value::Array(items) = v else {
                        return Err(mismatch(json_type(v).into()));
                    };
                    if let Some(bad) = items.iter().find(|i| !prim.accepts(i)) {
                        return Err(mismatch(format!("array<{}>", json_type(bad))));
                    }
                    ArgValue::Array(items.iter().map(|i| prim.convert(i)).collect())
                }
                ParamType::Enum(allowed) => {
                    let Value::String(s) = v else {
                        return Err(mismatch(json_type(v).into()));
                    };
                    if !allowed.contains(s) {
                        return Err(ValidationError::EnumOutOfRange {
                            name: p.name.clone(),
                            value: s.clone(),
                            allowed: allowed.clone(),
                        });
                    }
                    ArgValue::String(s.clone())
                }
            };
            out.insert(p.name.clone(), value);
        }
        Ok(ToolArgs(out))
    }
}

/// Wire form used in provider requests: `{name, description, parameters}`.
impl Serialize for ToolDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        json!({
            "name": self.name,
            "description": self.description,
            "parameters": self.json_schema(),
        })
        .serialize(s)
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_i64() => "integer",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Shorthand for [`ToolDescriptor::validate`].
pub fn validate_tool_args(d: &ToolDescriptor, raw: &str) -> Result<ToolArgs, ValidationError> {
    d.validate(raw)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    String(String),
    Integer(i64),
    Number(f64),
    Boolean(bool),
    Array(Vec<ArgValue>),
}

impl ArgValue {
    pub fn to_json(&self) -> Value {
        match self {
            ArgValue::String(s) => Value::String(s.clone()),
            ArgValue::Integer(i) => json!(i),
            ArgValue::Number(n) => json!(n),
            ArgValue::Boolean(b) => Value::Bool(*b),
            ArgValue::Array(items) => Value::Array(items.iter().map(ArgValue::to_json).collect()),
        }
    }
}

/// Validated arguments keyed by parameter name. Absent optionals are missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToolArgs(pub BTreeMap<String, ArgValue>);

impl ToolArgs {
    pub fn get(&self, name: &str) -> Option<&ArgValue> {
        self.0.get(name)
    }

    pub fn str(&self, name: &str) -> Option<&str> {
        match self.0.get(name) {
            Some(ArgValue::String(s)) => Some(s),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.0.get(name) {
            Some(ArgValue::Integer(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        match self.0.get(name) {
            Some(ArgValue::Number(n)) => Some(*n),
            Some(ArgValue::Integer(i)) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        match self.0.get(name) {
            Some(ArgValue::Boolean(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("arguments are not a JSON object: {0}")]
    MalformedJson(String),
    #[error("missing required argument {0:?}")]
    MissingRequired(String),
    #[error("argument {name:?} should be {expected}, got {got}")]
    TypeMismatch { name: String, expected: String, got: String },
    #[error("unknown argument {0:?}")]
    UnknownField(String),
    #[error("argument {name:?} must be one of {allowed:?}, got {value:?}")]
    EnumOutOfRange { name: String, value: String, allowed: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("a tool named {0:?} is already registered")]
    DuplicateToolName(String),
    #[error("tool name {0:?} is not an identifier")]
    InvalidToolName(String),
    #[error("tool {tool:?}, parameter {param:?}: {reason}")]
    InvalidParameterDeclaration { tool: String, param: String, reason: String },
}

/// Failure reported by (or on behalf of) a tool. Serialized into the TOOL
/// message as `{"error":{"code":...,"message":...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{code}: {message}")]
pub struct ToolError {
    pub code: String,
    pub message: String,
}

impl ToolError {
    pub const UNKNOWN_TOOL: &'static str = "UNKNOWN_TOOL";
    pub const INVALID_ARGUMENTS: &'static str = "INVALID_ARGUMENTS";
    pub const TOOL_FAILED: &'static str = "TOOL_FAILED";

    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        ToolError {
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        Self::new(Self::TOOL_FAILED, message)
    }

    pub fn to_content(&self) -> String {
        json!({ "error": { "code": self.code, "message": self.message } }).to_string()
    }
}

/// Result of [`ToolRegistry::invoke`]: the TOOL message for the conversation
/// plus the structured value for the caller.
#[derive(Debug, Clone)]
pub struct ToolOutcome {
    pub message: Message,
    pub result: Result<Value, ToolError>,
}

type Handler<C> = Arc<dyn Fn(C, ToolArgs) -> BoxFuture<'static, Result<Value, ToolError>> + Send + Sync>;

struct Entry<C> {
    descriptor: ToolDescriptor,
    handler: Handler<C>,
}

/// Named tools with per-call context `C`. Built once, then shared read-only.
pub struct ToolRegistry<C> {
    order: Vec<String>,
    tools: HashMap<String, Entry<C>>,
}

impl<C> Default for ToolRegistry<C> {
    fn default() -> Self {
        ToolRegistry {
            order: Vec::new(),
            tools: HashMap::new(),
        }
    }
}

impl<C> fmt::Debug for ToolRegistry<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.order).finish()
    }
}

impl<C: Send + 'static> ToolRegistry<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F, Fut>(&mut self, spec: ToolSpec, f: F) -> Result<ToolDescriptor, RegistryError>
    where
        F: Fn(C, ToolArgs) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = Result<Value, ToolError>> + Send + 'static,
    {
        if self.tools.contains_key(&spec.name) {
            return Err(RegistryError::DuplicateToolName(spec.name));
        }
        let descriptor = spec.descriptor()?;
        let handler: Handler<C> = Arc::new(move |ctx, args| f(ctx, args).boxed());
        self.order.push(descriptor.name.clone());
        self.tools.insert(
            descriptor.name.clone(),
            Entry {
                descriptor: descriptor.clone(),
                handler,
            },
        );
        Ok(descriptor)
    }

    pub fn descriptors(&self) -> Vec<ToolDescriptor> {
        self.order.iter().map(|n| self.tools[n].descriptor.clone()).collect()
    }

    pub fn descriptor(&self, name: &str) -> Option<&ToolDescriptor> {
        self.tools.get(name).map(|e| &e.descriptor)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Validates and runs `call`. Never fails: unknown tools, bad arguments,
    /// tool errors and panics all become error content in the TOOL message.
    pub async fn invoke(&self, ctx: C, call: &ToolCall) -> ToolOutcome {
        let result = self.run(ctx, call).await;
        let content = match &result {
            Ok(v) => v.to_string(),
            Err(e) => e.to_content(),
        };
        ToolOutcome {
            message: Message::tool(call.id.clone(), content),
            result,
        }
    }

    async fn run(&self, ctx: C, call: &ToolCall) -> Result<Value, ToolError> {
        let Some(entry) = self.tools.get(&call.name) else {
            return Err(ToolError::new(
                ToolError::UNKNOWN_TOOL,
                format!("unknown tool {:?}; available: {}", call.name, self.order.join(", ")),
            ));
        };
        let args = entry
            .descriptor
            .validate(&call.raw_arguments)
            .map_err(|e| ToolError::new(ToolError::INVALID_ARGUMENTS, e.to_string()))?;
        let handler = entry.handler.clone();
        let fut = match std::panic::catch_unwind(AssertUnwindSafe(|| handler(ctx, args))) {
            Ok(fut) => fut,
            Err(p) => return Err(panicked(p)),
        };
        match AssertUnwindSafe(fut).catch_unwind().await {
            Ok(r) => r,
            Err(p) => Err(panicked(p)),
        }
    }
}

fn panicked(payload: Box<dyn std::any::Any + Send>) -> ToolError {
    let detail = payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into());
    ToolError::failed(format!("tool crashed: {detail}"))
}
