//! Retrieval: an exact cosine vector index and a trigram index, both stored
//! as side tables of the relational store, fused by a linear score.
//!
//! For a query the engine takes the top `n_vec` chunks by cosine and the top
//! `n_lex` chunks by trigram Jaccard (both restricted to the visible scope),
//! unions the two pools and reranks the union by
//!
//! ```text
//! fused = alpha * (cosine + 1) / 2 + (1 - alpha) * trigram
//! ```
//!
//! Ordering everywhere is score descending, then chunk id ascending.

mod embed;
mod search;
mod similarity;

use thiserror::Error;

use crate::ids::CollectionId;
use crate::model::ModelError;

pub use embed::{embed_checked, EmbedError, Embedder, HashEmbedder, HttpEmbedder};
pub use search::{fused_score, ChunkHit, FusionWeights, Index, ReindexReport};
pub(crate) use search::{index_chunks, remove_chunks};
pub use similarity::{cosine_similarity, trigram_set, trigram_similarity, TrigramSet};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("embedder mismatch: index holds {expected:?}, got {got:?}")]
    EmbedderMismatch { expected: String, got: String },
    #[error("search scope is empty")]
    EmptyScope,
    #[error("permission denied on collection {0}")]
    PermissionDenied(CollectionId),
    #[error("collection {0} not found")]
    CollectionNotFound(CollectionId),
    #[error("embedding failed: {0}")]
    EmbeddingFailed(#[from] EmbedError),
    #[error("invalid fusion weights: {0}")]
    InvalidWeights(String),
    #[error("database error: {0}")]
    Db(#[from] rusqlite::Error),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for IndexError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Db(e) => IndexError::Db(e),
            ModelError::CollectionNotFound(c) => IndexError::CollectionNotFound(c),
            other => IndexError::Model(other),
        }
    }
}

pub(crate) fn encode_embedding(v: &[f32]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub(crate) fn decode_embedding(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_bytes_round_trip() {
        let v = vec![0.0, -1.5, f32::MIN_POSITIVE, 3.25];
        assert_eq!(decode_embedding(&encode_embedding(&v)), v);
    }
}
