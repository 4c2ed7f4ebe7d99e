//! The collection-scoped search tool handed to the model.

use std::collections::BTreeSet;

use lore_core::index::{ChunkHit, FusionWeights, Index};
use lore_core::model::PermissionLevel;
use lore_core::{CollectionId, PrincipalId};
use lore_llm::{RegistryError, ToolArgs, ToolError, ToolRegistry, ToolSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::events::{snippet, ChunkRef};

pub const SEARCH_TOOL: &str = "search";
pub const MAX_K: i64 = 20;

/// Error code when no readable collection is in scope.
pub const EMPTY_SCOPE: &str = "EMPTY_SCOPE";

/// What a tool invocation needs from its session.
#[derive(Clone)]
pub struct ToolContext {
    pub index: Index,
    pub principal: PrincipalId,
    pub selected: BTreeSet<CollectionId>,
    pub weights: FusionWeights,
}

/// One hit as returned to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub document_id: lore_core::DocumentId,
    pub chunk_id: lore_core::ChunkId,
    pub title: String,
    pub score: f64,
    pub text: String,
}

impl From<&ChunkHit> for SearchResult {
    fn from(h: &ChunkHit) -> Self {
        SearchResult {
            document_id: h.document_id,
            chunk_id: h.chunk_id,
            title: h.document_title.clone(),
            score: h.fused_score,
            text: h.snippet.clone(),
        }
    }
}

pub fn clamp_k(k: i64) -> usize {
    k.clamp(1, MAX_K) as usize
}

pub fn search_spec() -> ToolSpec {
    ToolSpec::new(
        SEARCH_TOOL,
        "Search the collections the user selected for passages relevant to a query. \
         Returns the best matching chunks with their document title and ids for citation.",
    )
    .required("query", "string", "What to look for, in natural language or keywords")
    .required("k", "integer", "How many chunks to return (1 to 20)")
}

/// Registers the search tool on `registry`.
pub fn register_search(registry: &mut ToolRegistry<ToolContext>) -> Result<(), RegistryError> {
    registry.register(search_spec(), search)?;
    Ok(())
}

/// Collections from `selected` the principal can still read, re-checked now.
pub fn readable_scope(ctx: &ToolContext) -> Result<BTreeSet<CollectionId>, ToolError> {
    let model = ctx.index.model();
    let mut scope = BTreeSet::new();
    for &c in &ctx.selected {
        match model.effective_permission(ctx.principal, c) {
            Ok(level) if level >= PermissionLevel::View => {
                scope.insert(c);
            }
            Ok(_) | Err(lore_core::model::ModelError::CollectionNotFound(_)) => {}
            Err(e) => return Err(ToolError::failed(e.to_string())),
        }
    }
    Ok(scope)
}

async fn search(ctx: ToolContext, args: ToolArgs) -> Result<Value, ToolError> {
    let query = args.str("query").unwrap_or_default().to_owned();
    let k = clamp_k(args.int("k").unwrap_or(MAX_K));
    if ctx.selected.is_empty() {
        return Err(ToolError::new(
            EMPTY_SCOPE,
            "no collections selected; answer without library sources or ask the user to select collections",
        ));
    }
    let scope = readable_scope(&ctx)?;
    if scope.is_empty() {
        return Err(ToolError::new(
            EMPTY_SCOPE,
            "no collections selected that you may read; ask the user to select collections",
        ));
    }
    let weights = FusionWeights {
        k,
        n_vec: ctx.weights.n_vec.max(k),
        n_lex: ctx.weights.n_lex.max(k),
        ..ctx.weights
    };
    let hits = ctx
        .index
        .hybrid_search(&query, &scope, ctx.principal, weights)
        .await
        .map_err(|e| ToolError::failed(e.to_string()))?;
    let results: Vec<SearchResult> = hits.iter().map(SearchResult::from).collect();
    Ok(serde_json::json!({ "results": results }))
}

/// Citations carried by a search tool result.
pub fn chunk_refs(result: &Value) -> Vec<ChunkRef> {
    let Some(results) = result.get("results") else {
        return Vec::new();
    };
    let parsed: Vec<SearchResult> = serde_json::from_value(results.clone()).unwrap_or_default();
    parsed
        .into_iter()
        .map(|r| ChunkRef {
            document_id: r.document_id,
            chunk_id: r.chunk_id,
            title: r.title,
            snippet: snippet(&r.text),
        })
        .collect()
}
