use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::sync::Arc;

use rusqlite::{params, params_from_iter, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use super::embed::{embed_checked, Embedder};
use super::similarity::{cosine_similarity, jaccard, trigram_set};
use super::{decode_embedding, encode_embedding, IndexError};
use crate::db::Database;
use crate::ids::{ChunkId, CollectionId, DocumentId, PrincipalId};
use crate::model::{self, Model, PermissionLevel, TextChunk};

/// Fusion knobs: `alpha` weights the vector side, `k` results are returned
/// from the union of `n_vec` vector and `n_lex` lexical candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub alpha: f64,
    pub k: usize,
    pub n_vec: usize,
    pub n_lex: usize,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            alpha: 0.7,
            k: 8,
            n_vec: 50,
            n_lex: 50,
        }
    }
}

impl FusionWeights {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(IndexError::InvalidWeights(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.k == 0 || self.n_vec == 0 || self.n_lex == 0 {
            return Err(IndexError::InvalidWeights("k, n_vec and n_lex must be positive".into()));
        }
        if self.k > self.n_vec + self.n_lex {
            return Err(IndexError::InvalidWeights(format!(
                "k = {} exceeds n_vec + n_lex = {}",
                self.k,
                self.n_vec + self.n_lex
            )));
        }
        Ok(())
    }

    pub fn with_k(self, k: usize) -> Self {
        FusionWeights { k, ..self }
    }
}

/// Linear fusion of a cosine in `[-1, 1]` and a trigram score in `[0, 1]`.
pub fn fused_score(alpha: f64, cosine: f64, trigram: f64) -> f64 {
    alpha * (cosine + 1.0) / 2.0 + (1.0 - alpha) * trigram
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkHit {
    pub chunk_id: ChunkId,
    pub document_id: DocumentId,
    pub collection_id: CollectionId,
    pub document_title: String,
    pub cosine_score: f64,
    pub trigram_score: f64,
    pub fused_score: f64,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReindexReport {
    pub chunks: u64,
    pub embedder_id: String,
}

/// Score with the search-wide ordering: higher score first, then lower id.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ranked {
    score: f64,
    id: ChunkId,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `n` best items, best first.
fn top_n(items: impl Iterator<Item = Ranked>, n: usize) -> Vec<Ranked> {
    let mut heap = BinaryHeap::with_capacity(n + 1);
    for item in items {
        if heap.len() < n {
            heap.push(Reverse(item));
        } else if let Some(Reverse(worst)) = heap.peek() {
            if item > *worst {
                heap.pop();
                heap.push(Reverse(item));
            }
        }
    }
    let mut out: Vec<Ranked> = heap.into_iter().map(|Reverse(r)| r).collect();
    out.sort_by(|a, b| b.cmp(a));
    out
}

struct Candidate {
    document: DocumentId,
    collection: CollectionId,
    title: String,
    text: String,
    cosine: f64,
    grams: usize,
}

const META_EMBEDDER: &str = "embedder_id";
const META_DIMENSION: &str = "dimension";

fn index_meta(conn: &Connection) -> rusqlite::Result<Option<(String, usize)>> {
    let get = |key: &str| {
        conn.query_row("SELECT value FROM index_meta WHERE key = ?1", [key], |r| {
            r.get::<_, String>(0)
        })
        .optional()
    };
    Ok(match (get(META_EMBEDDER)?, get(META_DIMENSION)?) {
        (Some(id), Some(dim)) => Some((id, dim.parse().unwrap_or(0))),
        _ => None,
    })
}

fn set_index_meta(conn: &Connection, embedder_id: &str, dimension: usize) -> rusqlite::Result<()> {
    let mut stmt = conn.prepare(
        "INSERT INTO index_meta (key, value) VALUES (?1, ?2)
         ON CONFLICT(key) DO UPDATE SET value = excluded.value",
    )?;
    stmt.execute(params![META_EMBEDDER, embedder_id])?;
    stmt.execute(params![META_DIMENSION, dimension.to_string()])?;
    Ok(())
}

fn check_meta(conn: &Connection, embedder_id: &str, dimension: usize) -> Result<(), IndexError> {
    match index_meta(conn)? {
        Some((id, _)) if id != embedder_id => Err(IndexError::EmbedderMismatch {
            expected: id,
            got: embedder_id.to_owned(),
        }),
        Some((_, dim)) if dim != dimension => Err(IndexError::DimensionMismatch {
            expected: dim,
            got: dimension,
        }),
        _ => Ok(()),
    }
}

/// Upserts `chunks` into both indices. Validates the whole batch before
/// writing anything.
pub(crate) fn index_chunks(
    conn: &Connection,
    embedder_id: &str,
    dimension: usize,
    chunks: &[TextChunk],
) -> Result<(), IndexError> {
    if chunks.is_empty() {
        return Ok(());
    }
    for chunk in chunks {
        if chunk.embedding.len() != dimension {
            return Err(IndexError::DimensionMismatch {
                expected: dimension,
                got: chunk.embedding.len(),
            });
        }
        if chunk.embedder_id != embedder_id {
            return Err(IndexError::EmbedderMismatch {
                expected: embedder_id.to_owned(),
                got: chunk.embedder_id.clone(),
            });
        }
    }
    check_meta(conn, embedder_id, dimension)?;
    set_index_meta(conn, embedder_id, dimension)?;

    let mut collection_of = conn.prepare("SELECT collection FROM documents WHERE id = ?1")?;
    let mut put_vec = conn.prepare(
        "INSERT INTO vector_index (chunk_id, document_id, collection, embedder_id, embedding)
         VALUES (?1, ?2, ?3, ?4, ?5)
         ON CONFLICT(chunk_id) DO UPDATE SET embedder_id = excluded.embedder_id,
             embedding = excluded.embedding, collection = excluded.collection",
    )?;
    let mut clear_grams = conn.prepare("DELETE FROM trigram_index WHERE chunk_id = ?1")?;
    let mut put_gram = conn.prepare("INSERT INTO trigram_index (gram, chunk_id) VALUES (?1, ?2)")?;
    let mut put_size = conn.prepare(
        "INSERT INTO trigram_sets (chunk_id, document_id, size) VALUES (?1, ?2, ?3)
         ON CONFLICT(chunk_id) DO UPDATE SET size = excluded.size",
    )?;
    for chunk in chunks {
        let collection: CollectionId = collection_of.query_row([chunk.document], |r| r.get(0))?;
        put_vec.execute(params![
            chunk.id,
            chunk.document,
            collection,
            chunk.embedder_id,
            encode_embedding(&chunk.embedding)
        ])?;
        let grams = trigram_set(&chunk.text);
        clear_grams.execute([chunk.id])?;
        for g in &grams {
            put_gram.execute(params![g, chunk.id])?;
        }
        put_size.execute(params![chunk.id, chunk.document, grams.len() as i64])?;
    }
    Ok(())
}

pub(crate) fn remove_chunks(conn: &Connection, document: DocumentId) -> rusqlite::Result<u64> {
    let removed = conn.execute("DELETE FROM vector_index WHERE document_id = ?1", [document])?;
    conn.execute(
        "DELETE FROM trigram_index WHERE chunk_id IN (SELECT chunk_id FROM trigram_sets WHERE document_id = ?1)",
        [document],
    )?;
    conn.execute("DELETE FROM trigram_sets WHERE document_id = ?1", [document])?;
    Ok(removed as u64)
}

/// The vector and trigram indices over the shared store.
#[derive(Clone)]
pub struct Index {
    model: Model,
    embedder: Arc<dyn Embedder>,
}

impl std::fmt::Debug for Index {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Index")
            .field("embedder", &self.embedder.embedder_id())
            .finish()
    }
}

impl Index {
    pub fn new(db: Arc<Database>, embedder: Arc<dyn Embedder>) -> Self {
        Index {
            model: Model::new(db),
            embedder,
        }
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn db(&self) -> &Database {
        self.model.db()
    }

    /// Upserts chunks (which must already exist as rows) into both indices.
    pub fn index_chunks(&self, chunks: &[TextChunk]) -> Result<(), IndexError> {
        let (id, dim) = (self.embedder.embedder_id(), self.embedder.dimension());
        self.db().write(|tx| index_chunks(tx, id, dim, chunks))
    }

    /// Drops every index entry of `document`'s chunks; returns how many.
    pub fn remove_chunks(&self, document: DocumentId) -> Result<u64, IndexError> {
        Ok(self.db().write(|tx| remove_chunks(tx, document))?)
    }

    /// Number of chunks in the vector index.
    pub fn len(&self) -> Result<u64, IndexError> {
        Ok(self.db().read(|c| {
            c.query_row("SELECT count(*) FROM vector_index", [], |r| r.get::<_, i64>(0))
        })? as u64)
    }

    pub fn is_empty(&self) -> Result<bool, IndexError> {
        Ok(self.len()? == 0)
    }

    /// Index entries (vector or trigram) whose chunk row no longer exists.
    pub fn dangling_entries(&self) -> Result<u64, IndexError> {
        Ok(self.db().read(|c| {
            c.query_row(
                "SELECT (SELECT count(*) FROM vector_index v LEFT JOIN chunks c ON c.id = v.chunk_id WHERE c.id IS NULL)
                      + (SELECT count(*) FROM trigram_sets t LEFT JOIN chunks c ON c.id = t.chunk_id WHERE c.id IS NULL)
                      + (SELECT count(*) FROM trigram_index t LEFT JOIN chunks c ON c.id = t.chunk_id WHERE c.id IS NULL)",
                [],
                |r| r.get::<_, i64>(0),
            )
        })? as u64)
    }

    /// Embedder the stored vectors were produced with, if anything is indexed.
    pub fn indexed_embedder(&self) -> Result<Option<(String, usize)>, IndexError> {
        Ok(self.db().read(index_meta)?)
    }

    /// Hybrid vector + trigram search over `scope` (and the collections nested
    /// beneath it) on behalf of `caller`, who needs VIEW on every scope entry.
    pub async fn hybrid_search(
        &self,
        query: &str,
        scope: &BTreeSet<CollectionId>,
        caller: PrincipalId,
        weights: FusionWeights,
    ) -> Result<Vec<ChunkHit>, IndexError> {
        weights.validate()?;
        if scope.is_empty() {
            return Err(IndexError::EmptyScope);
        }
        self.db().read(|c| {
            for &collection in scope {
                if model::effective_permission(c, caller, collection)? < PermissionLevel::View {
                    return Err(IndexError::PermissionDenied(collection));
                }
            }
            check_meta(c, self.embedder.embedder_id(), self.embedder.dimension())
        })?;

        let query_vec = embed_checked(self.embedder.as_ref(), &[query.to_owned()])
            .await?
            .pop()
            .expect("one vector per input");
        let query_grams = trigram_set(query);

        // one read: permissions, candidates and gram overlaps come from the same snapshot
        let (candidates, overlaps) = self.db().read(|c| -> Result<_, IndexError> {
            for &collection in scope {
                if model::effective_permission(c, caller, collection)? < PermissionLevel::View {
                    return Err(IndexError::PermissionDenied(collection));
                }
            }
            let collections = model::with_descendants(c, scope)?;
            Ok((
                load_candidates(c, &collections, &query_vec)?,
                gram_overlaps(c, &query_grams)?,
            ))
        })?;

        let lexical = |id: &ChunkId, cand: &Candidate| {
            let inter = overlaps.get(id).copied().unwrap_or(0);
            jaccard(inter, query_grams.len(), cand.grams)
        };
        let by_vector = top_n(
            candidates.iter().map(|(&id, c)| Ranked { score: c.cosine, id }),
            weights.n_vec,
        );
        let by_lexical = top_n(
            candidates.iter().map(|(&id, c)| Ranked {
                score: lexical(&id, c),
                id,
            }),
            weights.n_lex,
        );
        let pool: BTreeSet<ChunkId> = by_vector.iter().chain(&by_lexical).map(|r| r.id).collect();

        let mut hits: Vec<ChunkHit> = pool
            .into_iter()
            .map(|id| {
                let cand = &candidates[&id];
                let trigram = lexical(&id, cand);
                ChunkHit {
                    chunk_id: id,
                    document_id: cand.document,
                    collection_id: cand.collection,
                    document_title: cand.title.clone(),
                    cosine_score: cand.cosine,
                    trigram_score: trigram,
                    fused_score: fused_score(weights.alpha, cand.cosine, trigram),
                    snippet: cand.text.clone(),
                }
            })
            .collect();
        hits.sort_by(|a, b| {
            b.fused_score
                .total_cmp(&a.fused_score)
                .then_with(|| a.chunk_id.cmp(&b.chunk_id))
        });
        hits.truncate(weights.k);
        Ok(hits)
    }

    /// Re-embeds every chunk with the current embedder and rebuilds both indices.
    pub async fn reindex(&self) -> Result<ReindexReport, IndexError> {
        let rows: Vec<(ChunkId, DocumentId, u32, usize, usize, String)> = self.db().read(|c| {
            let mut stmt = c.prepare(
                "SELECT id, document, seq, span_start, span_end, text FROM chunks ORDER BY id",
            )?;
            let rows = stmt.query_map([], |r| {
                Ok((
                    r.get(0)?,
                    r.get(1)?,
                    r.get::<_, i64>(2)? as u32,
                    r.get::<_, i64>(3)? as usize,
                    r.get::<_, i64>(4)? as usize,
                    r.get(5)?,
                ))
            })?;
            rows.collect::<rusqlite::Result<Vec<_>>>()
        })?;
        let texts: Vec<String> = rows.iter().map(|r| r.5.clone()).collect();
        let vectors = embed_checked(self.embedder.as_ref(), &texts).await?;
        let embedder_id = self.embedder.embedder_id().to_owned();
        let chunks: Vec<TextChunk> = rows
            .into_iter()
            .zip(vectors)
            .map(|((id, document, seq, span_start, span_end, text), embedding)| TextChunk {
                id,
                document,
                seq,
                span_start,
                span_end,
                text,
                embedding,
                embedder_id: embedder_id.clone(),
            })
            .collect();
        let dim = self.embedder.dimension();
        self.db().write(|tx| -> Result<(), IndexError> {
            tx.execute_batch(
                "DELETE FROM vector_index; DELETE FROM trigram_index; DELETE FROM trigram_sets; DELETE FROM index_meta;",
            )?;
            tx.execute("UPDATE chunks SET embedder_id = ?1", [&embedder_id])?;
            set_index_meta(tx, &embedder_id, dim)?;
            index_chunks(tx, &embedder_id, dim, &chunks)
        })?;
        Ok(ReindexReport {
            chunks: chunks.len() as u64,
            embedder_id,
        })
    }
}

fn load_candidates(
    conn: &Connection,
    collections: &BTreeSet<CollectionId>,
    query: &[f32],
) -> Result<HashMap<ChunkId, Candidate>, IndexError> {
    let mut out = HashMap::new();
    if collections.is_empty() {
        return Ok(out);
    }
    let marks = vec!["?"; collections.len()].join(",");
    let mut stmt = conn.prepare(&format!(
        "SELECT v.chunk_id, v.document_id, v.collection, v.embedding, c.text, t.size, d.title
         FROM vector_index v
         JOIN chunks c ON c.id = v.chunk_id
         JOIN trigram_sets t ON t.chunk_id = v.chunk_id
         JOIN documents d ON d.id = v.document_id
         WHERE v.collection IN ({marks})"
    ))?;
    let mut rows = stmt.query(params_from_iter(collections.iter()))?;
    while let Some(row) = rows.next()? {
        let embedding = decode_embedding(&row.get::<_, Vec<u8>>(3)?);
        let cosine = match cosine_similarity(query, &embedding) {
            Ok(c) => c,
            // a text with no tokens has no direction: neutral similarity
            Err(IndexError::ZeroVector) => 0.0,
            Err(e) => return Err(e),
        };
        out.insert(
            row.get(0)?,
            Candidate {
                document: row.get(1)?,
                collection: row.get(2)?,
                text: row.get(4)?,
                grams: row.get::<_, i64>(5)? as usize,
                title: row.get(6)?,
                cosine,
            },
        );
    }
    Ok(out)
}

fn gram_overlaps(
    conn: &Connection,
    grams: &BTreeSet<String>,
) -> rusqlite::Result<HashMap<ChunkId, usize>> {
    let mut out = HashMap::new();
    if grams.is_empty() {
        return Ok(out);
    }
    let grams: Vec<&String> = grams.iter().collect();
    // stay well below SQLite's bound-parameter limit
    for batch in grams.chunks(900) {
        let marks = vec!["?"; batch.len()].join(",");
        let mut stmt = conn.prepare(&format!(
            "SELECT chunk_id, count(*) FROM trigram_index WHERE gram IN ({marks}) GROUP BY chunk_id"
        ))?;
        let mut rows = stmt.query(params_from_iter(batch.iter()))?;
        while let Some(row) = rows.next()? {
            *out.entry(row.get(0)?).or_insert(0) += row.get::<_, i64>(1)? as usize;
        }
    }
    Ok(out)
}
