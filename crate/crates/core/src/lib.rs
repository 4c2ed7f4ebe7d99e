//! Domain model and retrieval engine for a self-hosted research-group RAG service.
//!
//! Everything here persists into one SQLite database ([`db::Database`]):
//! collections and grants, documents and their chunks, the vector and trigram
//! indices, and blob reference counts. Original files live in a
//! content-addressed [`storage::BlobStore`] (filesystem or S3-compatible).
//!
//! - [`model`]: principals, the collection tree, the permission lattice, documents and chunks
//! - [`storage`]: content-addressed blob store with reference counting
//! - [`ingest`]: text extraction, chunking, arXiv import, transcripts and the atomic ingest pipeline
//! - [`index`]: embedders, cosine and trigram similarity, and fused hybrid search

pub mod db;
pub mod digest;
pub mod ids;
pub mod index;
pub mod ingest;
pub mod model;
pub mod storage;

pub use db::Database;
pub use digest::Digest;
pub use ids::{ChunkId, CollectionId, DocumentId, PrincipalId};
