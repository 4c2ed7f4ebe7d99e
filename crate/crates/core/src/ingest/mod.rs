//! From raw sources to indexed chunks.
//!
//! [`Ingestor::ingest_document`] runs extract, chunk and embed outside the
//! database, then persists the document, its chunks and their index entries
//! in a single transaction. A failure anywhere leaves nothing behind.

mod arxiv;
mod chunk;
mod extract;
mod pipeline;
mod transcript;

use thiserror::Error;

use crate::index::{EmbedError, IndexError};
use crate::model::{DocumentKind, ModelError};
use crate::storage::StorageError;

pub use arxiv::{
    parse_arxiv_id, parse_feed, ArxivClient, ArxivError, ArxivRecord, ArxivSource, EntryDraftRecord,
    FixtureArxivSource, HttpArxivSource, DEFAULT_ENDPOINT as ARXIV_ENDPOINT, EMPTY_FEED,
};
pub use chunk::{chunk_spans, chunk_text, CharOffsets, ChunkPolicy, ChunkSpan};
pub use extract::{normalize_text, Extractors, PdfExtractAdapter, PdfTextExtractor};
pub use pipeline::{Ingested, IngestHook, Ingestor, Source, Stage};
pub use transcript::{flatten_transcript, parse_transcript, TranscriptTurn, UNKNOWN_SPEAKER};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid chunk policy: size {size}, overlap {overlap}")]
    InvalidPolicy { size: usize, overlap: usize },
    #[error("no extractor registered for {0}")]
    UnsupportedKind(DocumentKind),
    #[error("extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("invalid arXiv identifier {0:?}")]
    InvalidArxivId(String),
    #[error(transparent)]
    Arxiv(ArxivError),
    #[error("embedding failed: {0}")]
    Embedding(#[from] EmbedError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Index(IndexError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("ingest aborted at {stage:?}: {reason}")]
    Aborted { stage: Stage, reason: String },
}

impl From<ArxivError> for IngestError {
    fn from(e: ArxivError) -> Self {
        match e {
            ArxivError::InvalidId(raw) => IngestError::InvalidArxivId(raw),
            other => IngestError::Arxiv(other),
        }
    }
}

impl From<IndexError> for IngestError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::EmbeddingFailed(e) => IngestError::Embedding(e),
            IndexError::Model(e) => IngestError::Model(e),
            other => IngestError::Index(other),
        }
    }
}

impl From<rusqlite::Error> for IngestError {
    fn from(e: rusqlite::Error) -> Self {
        IngestError::Model(ModelError::Db(e))
    }
}
