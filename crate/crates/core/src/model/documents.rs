use std::collections::BTreeMap;

use rusqlite::{params, Connection, OptionalExtension, Row};

use super::tree::{get_collection, require};
use super::{ContentHash, Document, DocumentKind, Model, ModelError, PermissionLevel, Result, TextChunk};
use crate::db::{is_unique_violation, now_rfc3339};
use crate::digest::Digest;
use crate::ids::{ChunkId, CollectionId, DocumentId, PrincipalId};
use crate::storage::{self, BlobRef};

/// Everything needed to persist a document record.
#[derive(Debug, Clone)]
pub struct NewDocument {
    pub collection: CollectionId,
    pub kind: DocumentKind,
    pub title: String,
    pub canonical_text: String,
    pub source_meta: BTreeMap<String, String>,
    pub blob: Option<BlobRef>,
}

/// What a document deletion removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletedDocument {
    pub document: DocumentId,
    pub chunks_removed: u64,
    /// The blob digest whose last reference went away with this document.
    pub released_blob: Option<Digest>,
}

const DOCUMENT_COLUMNS: &str = "d.id, d.collection, d.kind, d.title, d.source_meta, d.content_hash,
     d.ingested_at, b.digest, b.size, b.media_type";

fn document_from_row(row: &Row<'_>) -> rusqlite::Result<Document> {
    let kind: String = row.get(2)?;
    let meta: String = row.get(4)?;
    let hash: Vec<u8> = row.get(5)?;
    let digest: Option<String> = row.get(7)?;
    let blob = match digest {
        Some(hex) => Some(BlobRef {
            digest: hex.parse().map_err(|e| {
                rusqlite::Error::FromSqlConversionFailure(7, rusqlite::types::Type::Text, Box::new(e))
            })?,
            size: row.get::<_, i64>(8)? as u64,
            media_type: row.get(9)?,
        }),
        None => None,
    };
    let conv = |i, e: Box<dyn std::error::Error + Send + Sync>| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e)
    };
    Ok(Document {
        id: row.get(0)?,
        collection: row.get(1)?,
        kind: kind.parse().map_err(|e: ModelError| conv(2, Box::new(e)))?,
        title: row.get(3)?,
        source_meta: serde_json::from_str(&meta).map_err(|e| conv(4, Box::new(e)))?,
        content_hash: Digest(
            hash.try_into()
                .map_err(|_| conv(5, "content hash must be 32 bytes".into()))?,
        ),
        blob,
        ingested_at: row.get(6)?,
    })
}

pub(crate) fn get_document(conn: &Connection, id: DocumentId) -> Result<Option<Document>> {
    Ok(conn
        .query_row(
            &format!(
                "SELECT {DOCUMENT_COLUMNS} FROM documents d LEFT JOIN blobs b ON b.digest = d.blob_digest
                 WHERE d.id = ?1"
            ),
            [id],
            document_from_row,
        )
        .optional()?)
}

/// Inserts the document row, taking a reference on its blob. The
/// `(collection, content_hash)` constraint rejects duplicates.
pub(crate) fn insert_document(
    conn: &Connection,
    new: &NewDocument,
    caller: PrincipalId,
) -> Result<Document> {
    if get_collection(conn, new.collection)?.is_none() {
        return Err(ModelError::CollectionNotFound(new.collection));
    }
    require(conn, caller, new.collection, PermissionLevel::Edit)?;
    let hash = ContentHash::of_text(&new.canonical_text);
    if let Some(blob) = &new.blob {
        storage::retain(conn, blob)?;
    }
    let ingested_at = now_rfc3339();
    let meta = serde_json::to_string(&new.source_meta).expect("string map serializes");
    conn.execute(
        "INSERT INTO documents (collection, kind, title, source_meta, content_hash, canonical_text, blob_digest, ingested_at)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
        params![
            new.collection,
            new.kind.as_str(),
            new.title,
            meta,
            &hash.0[..],
            new.canonical_text,
            new.blob.as_ref().map(|b| b.digest.to_hex()),
            ingested_at,
        ],
    )
    .map_err(|e| {
        if is_unique_violation(&e) {
            ModelError::DuplicateContentInCollection
        } else {
            ModelError::Db(e)
        }
    })?;
    Ok(Document {
        id: DocumentId(conn.last_insert_rowid()),
        collection: new.collection,
        kind: new.kind,
        title: new.title.clone(),
        source_meta: new.source_meta.clone(),
        content_hash: hash,
        blob: new.blob.clone(),
        ingested_at,
    })
}

/// A chunk row before it has an id.
#[derive(Debug, Clone)]
pub(crate) struct ChunkRow<'a> {
    pub span_start: usize,
    pub span_end: usize,
    pub text: &'a str,
}

pub(crate) fn insert_chunks(
    conn: &Connection,
    document: DocumentId,
    text_len: usize,
    rows: &[ChunkRow<'_>],
    embedder_id: &str,
) -> Result<Vec<ChunkId>> {
    let mut stmt = conn.prepare(
        "INSERT INTO chunks (document, seq, span_start, span_end, text, embedder_id)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
    )?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut prev_start = None;
    for (seq, row) in rows.iter().enumerate() {
        if row.span_start >= row.span_end || row.span_end > text_len {
            return Err(ModelError::Invalid(format!(
                "chunk span [{}, {}) outside text of length {text_len}",
                row.span_start, row.span_end
            )));
        }
        if prev_start.is_some_and(|p| row.span_start <= p) {
            return Err(ModelError::Invalid("chunk spans must strictly advance".into()));
        }
        prev_start = Some(row.span_start);
        stmt.execute(params![
            document,
            seq as i64,
            row.span_start as i64,
            row.span_end as i64,
            row.text,
            embedder_id
        ])?;
        ids.push(ChunkId(conn.last_insert_rowid()));
    }
    Ok(ids)
}

/// Removes the document and (by cascade) its chunks and index entries,
/// releasing its blob reference.
pub(crate) fn delete_document(
    conn: &Connection,
    id: DocumentId,
    caller: PrincipalId,
) -> Result<DeletedDocument> {
    let doc = get_document(conn, id)?.ok_or(ModelError::DocumentNotFound(id))?;
    require(conn, caller, doc.collection, PermissionLevel::Edit)?;
    let chunks: i64 = conn.query_row("SELECT count(*) FROM chunks WHERE document = ?1", [id], |r| {
        r.get(0)
    })?;
    conn.execute("DELETE FROM documents WHERE id = ?1", [id])?;
    let mut released_blob = None;
    if let Some(blob) = &doc.blob {
        if storage::release(conn, &blob.digest)? == Some(0) {
            released_blob = Some(blob.digest);
        }
    }
    Ok(DeletedDocument {
        document: id,
        chunks_removed: chunks as u64,
        released_blob,
    })
}

fn chunk_from_row(row: &Row<'_>) -> rusqlite::Result<TextChunk> {
    let embedding: Option<Vec<u8>> = row.get(7)?;
    Ok(TextChunk {
        id: row.get(0)?,
        document: row.get(1)?,
        seq: row.get::<_, i64>(2)? as u32,
        span_start: row.get::<_, i64>(3)? as usize,
        span_end: row.get::<_, i64>(4)? as usize,
        text: row.get(5)?,
        embedder_id: row.get(6)?,
        embedding: embedding
            .map(|b| crate::index::decode_embedding(&b))
            .unwrap_or_default(),
    })
}

impl Model {
    pub fn document(&self, id: DocumentId) -> Result<Document> {
        self.db
            .read(|c| get_document(c, id)?.ok_or(ModelError::DocumentNotFound(id)))
    }

    /// The document, provided `caller` may at least view its collection.
    pub fn document_for(&self, id: DocumentId, caller: PrincipalId) -> Result<Document> {
        self.db.read(|c| {
            let doc = get_document(c, id)?.ok_or(ModelError::DocumentNotFound(id))?;
            require(c, caller, doc.collection, PermissionLevel::View)?;
            Ok(doc)
        })
    }

    pub fn documents_in(&self, collection: CollectionId) -> Result<Vec<Document>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(&format!(
                "SELECT {DOCUMENT_COLUMNS} FROM documents d LEFT JOIN blobs b ON b.digest = d.blob_digest
                 WHERE d.collection = ?1 ORDER BY d.id"
            ))?;
            let rows = stmt.query_map([collection], document_from_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    pub fn canonical_text(&self, id: DocumentId) -> Result<String> {
        self.db.read(|c| {
            c.query_row("SELECT canonical_text FROM documents WHERE id = ?1", [id], |r| {
                r.get(0)
            })
            .optional()?
            .ok_or(ModelError::DocumentNotFound(id))
        })
    }

    /// Chunks of a document in `seq` order, with their indexed embeddings.
    pub fn chunks_of(&self, id: DocumentId) -> Result<Vec<TextChunk>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(
                "SELECT c.id, c.document, c.seq, c.span_start, c.span_end, c.text, c.embedder_id, v.embedding
                 FROM chunks c LEFT JOIN vector_index v ON v.chunk_id = c.id
                 WHERE c.document = ?1 ORDER BY c.seq",
            )?;
            let rows = stmt.query_map([id], chunk_from_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    pub fn document_count(&self) -> Result<u64> {
        self.db.read(|c| {
            Ok(c.query_row("SELECT count(*) FROM documents", [], |r| r.get::<_, i64>(0))? as u64)
        })
    }

    pub fn chunk_count(&self) -> Result<u64> {
        self.db.read(|c| {
            Ok(c.query_row("SELECT count(*) FROM chunks", [], |r| r.get::<_, i64>(0))? as u64)
        })
    }

    /// Chunks whose document row is missing. Always empty while foreign keys hold.
    pub fn orphan_chunks(&self) -> Result<Vec<ChunkId>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(
                "SELECT c.id FROM chunks c LEFT JOIN documents d ON d.id = c.document WHERE d.id IS NULL",
            )?;
            let rows = stmt.query_map([], |r| r.get(0))?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }
}
