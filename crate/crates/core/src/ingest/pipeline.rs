use std::collections::BTreeMap;
use std::sync::Arc;

use rusqlite::{params, OptionalExtension};
use serde::{Deserialize, Serialize};

use super::arxiv::{ArxivClient, ArxivRecord};
use super::chunk::{chunk_text, CharOffsets, ChunkPolicy, ChunkSpan};
use super::extract::{normalize_text, Extractors};
use super::transcript::{flatten_transcript, parse_transcript};
use super::IngestError;
use crate::db::now_rfc3339;
use crate::digest::Digest;
use crate::ids::{ChunkId, CollectionId, DocumentId, PrincipalId};
use crate::index::{self, embed_checked, Index};
use crate::model::{
    self, ChunkRow, DeletedDocument, Document, DocumentKind, Model, ModelError, NewDocument,
    PermissionLevel, TextChunk,
};
use crate::storage::{BlobRef, BlobStore};

/// Raw material for one document.
#[derive(Debug, Clone)]
pub enum Source {
    /// An uploaded file, extracted according to `kind`. Its bytes are kept as the blob.
    Upload {
        bytes: Vec<u8>,
        kind: DocumentKind,
        media_type: Option<String>,
    },
    /// An arXiv record, with the PDF if it could be fetched.
    Arxiv {
        record: ArxivRecord,
        pdf: Option<Vec<u8>>,
    },
    /// Transcript text in the `[HH:MM:SS] Speaker: text` line format.
    Transcript { text: String },
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Extract,
    StoreBlob,
    Chunk,
    Embed,
    Attach,
    PersistChunks,
    Index,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Extract,
        Stage::StoreBlob,
        Stage::Chunk,
        Stage::Embed,
        Stage::Attach,
        Stage::PersistChunks,
        Stage::Index,
    ];
}

/// Observer called before each stage. Returning an error aborts the ingest
/// at that point (used for fault injection and admission control).
pub trait IngestHook: Send + Sync {
    fn before(&self, stage: Stage) -> Result<(), String>;
}

/// A persisted document and its chunk ids in `seq` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub document: Document,
    pub chunk_ids: Vec<ChunkId>,
}

struct Prepared {
    new: NewDocument,
    blob_bytes: Option<Vec<u8>>,
}

#[derive(Clone)]
pub struct Ingestor {
    model: Model,
    index: Index,
    blobs: BlobStore,
    extractors: Extractors,
    policy: ChunkPolicy,
    arxiv: Option<ArxivClient>,
    hook: Option<Arc<dyn IngestHook>>,
}

impl std::fmt::Debug for Ingestor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ingestor")
            .field("policy", &self.policy)
            .field("extractors", &self.extractors)
            .field("blobs", &self.blobs)
            .finish_non_exhaustive()
    }
}

impl Ingestor {
    pub fn new(index: Index, blobs: BlobStore, extractors: Extractors, policy: ChunkPolicy) -> Result<Self, IngestError> {
        policy.validate()?;
        Ok(Ingestor {
            model: index.model().clone(),
            index,
            blobs,
            extractors,
            policy,
            arxiv: None,
            hook: None,
        })
    }

    pub fn with_arxiv(mut self, client: ArxivClient) -> Self {
        self.arxiv = Some(client);
        self
    }

    pub fn with_hook(mut self, hook: Arc<dyn IngestHook>) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn policy(&self) -> ChunkPolicy {
        self.policy
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.blobs
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn checkpoint(&self, stage: Stage) -> Result<(), IngestError> {
        match &self.hook {
            Some(hook) => hook
                .before(stage)
                .map_err(|reason| IngestError::Aborted { stage, reason }),
            None => Ok(()),
        }
    }

    /// Extracts, chunks, embeds and persists `source` into `collection`.
    /// `title` defaults to the arXiv title, or "untitled".
    pub async fn ingest_document(
        &self,
        source: Source,
        collection: CollectionId,
        title: Option<String>,
        caller: PrincipalId,
    ) -> Result<Ingested, IngestError> {
        // fail fast before spending extraction or embedding work
        self.precheck(collection, caller, None)?;
        self.checkpoint(Stage::Extract)?;
        let prepared = self.prepare(source, collection, title)?;
        self.persist(prepared.new, prepared.blob_bytes, caller).await
    }

    /// Persists a document whose canonical text is already known, chunking,
    /// embedding and indexing it in the same atomic step. A `blob` must
    /// already be stored (`BlobStore::put_blob`); the document takes its own
    /// reference on it.
    pub async fn attach_document(&self, new: NewDocument, caller: PrincipalId) -> Result<Ingested, IngestError> {
        let mut new = new;
        new.canonical_text = normalize_text(&new.canonical_text);
        self.persist(new, None, caller).await
    }

    /// Downloads an arXiv paper and ingests it. When the PDF cannot be
    /// fetched or read, the title and abstract are indexed instead.
    pub async fn import_arxiv(
        &self,
        raw_id: &str,
        collection: CollectionId,
        caller: PrincipalId,
    ) -> Result<Ingested, IngestError> {
        let client = self
            .arxiv
            .as_ref()
            .ok_or_else(|| IngestError::Arxiv(super::ArxivError::Network("no arXiv client configured".into())))?;
        self.precheck(collection, caller, None)?;
        let record = client.fetch(raw_id).await?;
        let pdf = client.fetch_pdf(&record).await.ok();
        self.ingest_document(Source::Arxiv { record, pdf }, collection, None, caller)
            .await
    }

    /// Removes a document with its chunks and index entries; returns what was removed.
    pub async fn delete_document(&self, id: DocumentId, caller: PrincipalId) -> Result<DeletedDocument, IngestError> {
        let deleted = self.model.db().write(|tx| -> Result<_, IngestError> {
            let removed_entries = index::remove_chunks(tx, id)?;
            let deleted = model::delete_document(tx, id, caller)?;
            debug_assert!(removed_entries <= deleted.chunks_removed);
            Ok(deleted)
        })?;
        if let Some(digest) = &deleted.released_blob {
            self.blobs.purge(digest).await?;
        }
        Ok(deleted)
    }

    fn precheck(&self, collection: CollectionId, caller: PrincipalId, hash: Option<&Digest>) -> Result<(), IngestError> {
        self.model.db().read(|c| -> Result<(), IngestError> {
            if model::get_collection(c, collection)?.is_none() {
                return Err(ModelError::CollectionNotFound(collection).into());
            }
            model::require(c, caller, collection, PermissionLevel::Edit)?;
            if let Some(hash) = hash {
                let dup: Option<i64> = c
                    .query_row(
                        "SELECT id FROM documents WHERE collection = ?1 AND content_hash = ?2",
                        params![collection, &hash.0[..]],
                        |r| r.get(0),
                    )
                    .optional()?;
                if dup.is_some() {
                    return Err(ModelError::DuplicateContentInCollection.into());
                }
            }
            Ok(())
        })
    }

    fn prepare(&self, source: Source, collection: CollectionId, title: Option<String>) -> Result<Prepared, IngestError> {
        let mut source_meta = BTreeMap::new();
        let (kind, text, title, blob_bytes, media_type) = match source {
            Source::Upload {
                bytes,
                kind,
                media_type,
            } => {
                let mut text = self.extractors.extract_text(&bytes, kind)?;
                if kind == DocumentKind::Transcript {
                    text = flatten_transcript(&parse_transcript(&text));
                }
                let media_type = media_type.unwrap_or_else(|| default_media_type(kind).to_owned());
                (kind, text, title, Some(bytes), media_type)
            }
            Source::Transcript { text } => {
                let flat = flatten_transcript(&parse_transcript(&normalize_text(&text)));
                (DocumentKind::Transcript, flat, title, None, String::new())
            }
            Source::Arxiv { record, pdf } => {
                source_meta.insert("arxiv_id".into(), record.arxiv_id.clone());
                source_meta.insert("authors".into(), record.authors.join("; "));
                source_meta.insert("pdf_url".into(), record.pdf_url.clone());
                source_meta.insert("imported_at".into(), now_rfc3339());
                if let Some(published) = &record.published {
                    source_meta.insert("published".into(), published.clone());
                }
                let from_pdf = match &pdf {
                    Some(bytes) if self.extractors.supports(DocumentKind::PdfText) => {
                        match self.extractors.extract_text(bytes, DocumentKind::PdfText) {
                            Ok(t) if !t.trim().is_empty() => Some(t),
                            Ok(_) => {
                                source_meta.insert("extraction_error".into(), "PDF has no text layer".into());
                                None
                            }
                            Err(e) => {
                                source_meta.insert("extraction_error".into(), e.to_string());
                                None
                            }
                        }
                    }
                    _ => None,
                };
                let text = match from_pdf {
                    Some(t) => {
                        source_meta.insert("text_source".into(), "pdf".into());
                        t
                    }
                    None => {
                        source_meta.insert("text_source".into(), "abstract".into());
                        normalize_text(&format!("{}\n\n{}", record.title, record.abstract_text))
                    }
                };
                let title = title.or(Some(record.title.clone()));
                (DocumentKind::PdfText, text, title, pdf, "application/pdf".to_owned())
            }
        };
        let title = title
            .map(|t| t.trim().to_owned())
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| "untitled".to_owned());
        Ok(Prepared {
            new: NewDocument {
                collection,
                kind,
                title,
                canonical_text: text,
                source_meta,
                blob: blob_bytes.as_ref().map(|b| BlobRef::for_content(b, &media_type)),
            },
            blob_bytes,
        })
    }

    async fn persist(&self, new: NewDocument, blob_bytes: Option<Vec<u8>>, caller: PrincipalId) -> Result<Ingested, IngestError> {
        let hash = Digest::of_text(&new.canonical_text);
        self.precheck(new.collection, caller, Some(&hash))?;

        let staged = match &blob_bytes {
            Some(bytes) => {
                self.checkpoint(Stage::StoreBlob)?;
                let media_type = new.blob.as_ref().map(|b| b.media_type.as_str()).unwrap_or("application/octet-stream");
                Some(self.blobs.stage(bytes, media_type).await?)
            }
            None => None,
        };
        let result = self.chunk_embed_commit(&new, caller).await;
        if let Some(blob) = &staged {
            self.blobs.unstage(&blob.digest, result.is_ok()).await?;
        }
        result
    }

    async fn chunk_embed_commit(&self, new: &NewDocument, caller: PrincipalId) -> Result<Ingested, IngestError> {
        self.checkpoint(Stage::Chunk)?;
        let spans: Vec<ChunkSpan> = chunk_text(&new.canonical_text, self.policy)?;
        let offsets = CharOffsets::new(&new.canonical_text);
        let texts: Vec<String> = spans.iter().map(|&s| offsets.slice(s).to_owned()).collect();

        self.checkpoint(Stage::Embed)?;
        let embedder = self.index.embedder();
        let vectors = embed_checked(embedder.as_ref(), &texts).await?;
        let (embedder_id, dim) = (embedder.embedder_id().to_owned(), embedder.dimension());

        self.model.db().write(|tx| -> Result<Ingested, IngestError> {
            self.checkpoint(Stage::Attach)?;
            let document = model::insert_document(tx, new, caller)?;
            self.checkpoint(Stage::PersistChunks)?;
            let rows: Vec<ChunkRow<'_>> = spans
                .iter()
                .zip(&texts)
                .map(|(s, t)| ChunkRow {
                    span_start: s.start,
                    span_end: s.end,
                    text: t,
                })
                .collect();
            let ids = model::insert_chunks(tx, document.id, offsets.char_len(), &rows, &embedder_id)?;
            self.checkpoint(Stage::Index)?;
            let chunks: Vec<TextChunk> = ids
                .iter()
                .zip(spans.iter().zip(texts.iter().zip(vectors)))
                .enumerate()
                .map(|(seq, (&id, (span, (text, embedding))))| TextChunk {
                    id,
                    document: document.id,
                    seq: seq as u32,
                    span_start: span.start,
                    span_end: span.end,
                    text: text.clone(),
                    embedding,
                    embedder_id: embedder_id.clone(),
                })
                .collect();
            index::index_chunks(tx, &embedder_id, dim, &chunks)?;
            Ok(Ingested {
                document,
                chunk_ids: ids,
            })
        })
    }
}

fn default_media_type(kind: DocumentKind) -> &'static str {
    match kind {
        DocumentKind::PdfText => "application/pdf",
        DocumentKind::Tex => "application/x-tex",
        DocumentKind::Transcript | DocumentKind::Note => "text/plain; charset=utf-8",
    }
}
