//! Principals, the collection tree, permissions, documents and chunks.
//!
//! Collections form a forest. A principal's effective permission on a
//! collection is `EDIT` if it owns the collection or any ancestor, otherwise
//! the highest level granted to it on the collection or any ancestor, and
//! `NONE` when nothing applies. There are no deny rules.

mod documents;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::Database;
use crate::digest::Digest;
use crate::ids::{ChunkId, CollectionId, DocumentId, PrincipalId};
use crate::storage::BlobRef;

pub use documents::{DeletedDocument, NewDocument};
pub(crate) use documents::{delete_document, insert_chunks, insert_document, ChunkRow};
pub(crate) use tree::{effective_permission, get_collection, require, with_descendants};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a sibling collection is already named {0:?}")]
    DuplicateSiblingName(String),
    #[error("parent collection {0} not found")]
    ParentNotFound(CollectionId),
    #[error("collection {0} not found")]
    CollectionNotFound(CollectionId),
    #[error("principal {0} not found")]
    PrincipalNotFound(String),
    #[error("document {0} not found")]
    DocumentNotFound(DocumentId),
    #[error("permission denied")]
    PermissionDenied,
    #[error("moving collection {0} there would create a cycle")]
    CycleDetected(CollectionId),
    #[error("collection already holds a document with identical content")]
    DuplicateContentInCollection,
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("database error: {0}")]
    Db(#[from] rusqlite::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub id: PrincipalId,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collection {
    pub id: CollectionId,
    pub name: String,
    pub owner: PrincipalId,
    pub parent: Option<CollectionId>,
    pub created_at: String,
}

/// `NONE < VIEW < EDIT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PermissionLevel {
    None,
    View,
    Edit,
}

impl PermissionLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            PermissionLevel::None => "NONE",
            PermissionLevel::View => "VIEW",
            PermissionLevel::Edit => "EDIT",
        }
    }
}

impl fmt::Display for PermissionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PermissionLevel {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NONE" => Ok(PermissionLevel::None),
            "VIEW" => Ok(PermissionLevel::View),
            "EDIT" => Ok(PermissionLevel::Edit),
            other => Err(ModelError::Invalid(format!("permission level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionGrant {
    pub collection: CollectionId,
    pub principal: PrincipalId,
    pub level: PermissionLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DocumentKind {
    PdfText,
    Tex,
    Transcript,
    Note,
}

impl DocumentKind {
    pub const ALL: [DocumentKind; 4] = [
        DocumentKind::PdfText,
        DocumentKind::Tex,
        DocumentKind::Transcript,
        DocumentKind::Note,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::PdfText => "PDF_TEXT",
            DocumentKind::Tex => "TEX",
            DocumentKind::Transcript => "TRANSCRIPT",
            DocumentKind::Note => "NOTE",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocumentKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "PDF_TEXT" | "PDF" => Ok(DocumentKind::PdfText),
            "TEX" => Ok(DocumentKind::Tex),
            "TRANSCRIPT" => Ok(DocumentKind::Transcript),
            "NOTE" => Ok(DocumentKind::Note),
            _ => Err(ModelError::Invalid(format!("document kind {s:?}"))),
        }
    }
}

/// SHA-256 of a document's canonical text.
pub type ContentHash = Digest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocumentId,
    pub collection: CollectionId,
    pub kind: DocumentKind,
    pub title: String,
    pub source_meta: BTreeMap<String, String>,
    pub content_hash: ContentHash,
    pub blob: Option<BlobRef>,
    pub ingested_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextChunk {
    pub id: ChunkId,
    pub document: DocumentId,
    pub seq: u32,
    pub span_start: usize,
    pub span_end: usize,
    pub text: String,
    pub embedding: Vec<f32>,
    pub embedder_id: String,
}

/// Entry point for the collection tree, permissions and document records.
#[derive(Debug, Clone)]
pub struct Model {
    db: Arc<Database>,
}

impl Model {
    pub fn new(db: Arc<Database>) -> Self {
        Model { db }
    }

    pub fn db(&self) -> &Arc<Database> {
        &self.db
    }
}
