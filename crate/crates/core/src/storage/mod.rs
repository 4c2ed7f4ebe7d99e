//! Content-addressed blob storage.
//!
//! Objects are keyed by the hex SHA-256 of their bytes, so identical uploads
//! collapse into one object and every read can be verified. Reference counts
//! live in the relational store next to the documents that hold them; the
//! backend only ever sees `put`/`get`/`delete` by key.

mod fs;
mod memory;
mod s3;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::Database;
use crate::digest::Digest;

pub use fs::FsBackend;
pub use memory::MemoryBackend;
pub use s3::{S3Backend, S3Config};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlobRef {
    pub digest: Digest,
    pub size: u64,
    pub media_type: String,
}

impl BlobRef {
    pub fn for_content(content: &[u8], media_type: &str) -> Self {
        BlobRef {
            digest: Digest::of(content),
            size: content.len() as u64,
            media_type: media_type.to_owned(),
        }
    }

    pub fn key(&self) -> String {
        self.digest.to_hex()
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("blob backend unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("blob backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("blob {0} not found")]
    NotFound(Digest),
    #[error("blob {expected} failed verification (read back {actual})")]
    IntegrityError { expected: Digest, actual: Digest },
    #[error("database error: {0}")]
    Db(#[from] rusqlite::Error),
}

impl From<BackendError> for StorageError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Unavailable(m) => StorageError::BackendUnavailable(m),
        }
    }
}

/// Raw object storage addressed by key.
#[async_trait]
pub trait BlobBackend: Send + Sync {
    fn name(&self) -> &str;
    /// Writes `bytes` under `key`, overwriting any existing object.
    async fn put(&self, key: &str, bytes: &[u8]) -> Result<(), BackendError>;
    async fn get(&self, key: &str) -> Result<Option<Vec<u8>>, BackendError>;
    async fn exists(&self, key: &str) -> Result<bool, BackendError>;
    /// Deleting a missing key is not an error.
    async fn delete(&self, key: &str) -> Result<(), BackendError>;
}

pub(crate) fn retain(conn: &Connection, blob: &BlobRef) -> rusqlite::Result<u64> {
    conn.execute(
        "INSERT INTO blobs (digest, size, media_type, refcount) VALUES (?1, ?2, ?3, 1)
         ON CONFLICT(digest) DO UPDATE SET refcount = refcount + 1",
        params![blob.digest.to_hex(), blob.size as i64, blob.media_type],
    )?;
    conn.query_row(
        "SELECT refcount FROM blobs WHERE digest = ?1",
        [blob.digest.to_hex()],
        |r| r.get::<_, i64>(0).map(|n| n as u64),
    )
}

/// Decrements the count, dropping the row at zero. `None` if unknown.
pub(crate) fn release(conn: &Connection, digest: &Digest) -> rusqlite::Result<Option<u64>> {
    let hex = digest.to_hex();
    let Some(count) = conn
        .query_row("SELECT refcount FROM blobs WHERE digest = ?1", [&hex], |r| {
            r.get::<_, i64>(0)
        })
        .optional()?
    else {
        return Ok(None);
    };
    if count <= 1 {
        conn.execute("DELETE FROM blobs WHERE digest = ?1", [&hex])?;
        Ok(Some(0))
    } else {
        conn.execute("UPDATE blobs SET refcount = refcount - 1 WHERE digest = ?1", [&hex])?;
        Ok(Some(count as u64 - 1))
    }
}

pub(crate) fn lookup(conn: &Connection, digest: &Digest) -> rusqlite::Result<Option<(BlobRef, u64)>> {
    conn.query_row(
        "SELECT size, media_type, refcount FROM blobs WHERE digest = ?1",
        [digest.to_hex()],
        |r| {
            Ok((
                BlobRef {
                    digest: *digest,
                    size: r.get::<_, i64>(0)? as u64,
                    media_type: r.get(1)?,
                },
                r.get::<_, i64>(2)? as u64,
            ))
        },
    )
    .optional()
}

/// Reference-counted, content-addressed store over a [`BlobBackend`].
#[derive(Clone)]
pub struct BlobStore {
    db: Arc<Database>,
    backend: Arc<dyn BlobBackend>,
    // objects written by in-flight ingests whose reference is not committed yet
    staged: Arc<Mutex<HashMap<Digest, usize>>>,
}

impl std::fmt::Debug for BlobStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlobStore")
            .field("backend", &self.backend.name())
            .finish()
    }
}

impl BlobStore {
    pub fn new(db: Arc<Database>, backend: Arc<dyn BlobBackend>) -> Self {
        BlobStore {
            db,
            backend,
            staged: Arc::default(),
        }
    }

    pub fn backend(&self) -> &Arc<dyn BlobBackend> {
        &self.backend
    }

    /// Stores `content` and takes one reference on it.
    pub async fn put_blob(&self, content: &[u8], media_type: &str) -> Result<BlobRef, StorageError> {
        let blob = self.stage(content, media_type).await?;
        let retained = self.db.write(|tx| retain(tx, &blob));
        self.unstage(&blob.digest, retained.is_ok()).await?;
        retained?;
        Ok(blob)
    }

    /// Reads and verifies the object behind `blob`.
    pub async fn get_blob(&self, blob: &BlobRef) -> Result<Vec<u8>, StorageError> {
        self.get_by_digest(&blob.digest).await
    }

    pub async fn get_by_digest(&self, digest: &Digest) -> Result<Vec<u8>, StorageError> {
        if self.db.read(|c| lookup(c, digest))?.is_none() {
            return Err(StorageError::NotFound(*digest));
        }
        let bytes = self
            .backend
            .get(&digest.to_hex())
            .await?
            .ok_or(StorageError::NotFound(*digest))?;
        let actual = Digest::of(&bytes);
        if actual != *digest {
            return Err(StorageError::IntegrityError {
                expected: *digest,
                actual,
            });
        }
        Ok(bytes)
    }

    /// Drops one reference; the object is deleted when none remain.
    pub async fn release_blob(&self, blob: &BlobRef) -> Result<u64, StorageError> {
        let remaining = self
            .db
            .write(|tx| release(tx, &blob.digest))?
            .ok_or(StorageError::NotFound(blob.digest))?;
        if remaining == 0 {
            self.purge(&blob.digest).await?;
        }
        Ok(remaining)
    }

    pub fn refcount(&self, digest: &Digest) -> Result<u64, StorageError> {
        Ok(self
            .db
            .read(|c| lookup(c, digest))?
            .map(|(_, n)| n)
            .unwrap_or(0))
    }

    /// Writes the object without touching reference counts. Callers take the
    /// reference inside their own transaction via the document lifecycle.
    /// Every successful `stage` must be paired with one [`BlobStore::unstage`].
    pub(crate) async fn stage(&self, content: &[u8], media_type: &str) -> Result<BlobRef, StorageError> {
        let blob = BlobRef::for_content(content, media_type);
        *self.staged_lock().entry(blob.digest).or_insert(0) += 1;
        let key = blob.key();
        let written = async {
            if !self.backend.exists(&key).await? {
                self.backend.put(&key, content).await?;
            }
            Ok::<_, StorageError>(())
        }
        .await;
        match written {
            Ok(()) => Ok(blob),
            Err(e) => {
                self.unstage(&blob.digest, false).await?;
                Err(e)
            }
        }
    }

    /// Ends one staging of `digest`. When the caller did not commit a
    /// reference the object is purged unless something else holds it.
    pub(crate) async fn unstage(&self, digest: &Digest, committed: bool) -> Result<(), StorageError> {
        {
            let mut staged = self.staged_lock();
            if let Some(n) = staged.get_mut(digest) {
                *n -= 1;
                if *n == 0 {
                    staged.remove(digest);
                }
            }
        }
        if committed {
            Ok(())
        } else {
            self.purge(digest).await
        }
    }

    /// Deletes the object if no reference to it is recorded or staged.
    pub(crate) async fn purge(&self, digest: &Digest) -> Result<(), StorageError> {
        if self.staged_lock().contains_key(digest) {
            return Ok(());
        }
        if self.db.read(|c| lookup(c, digest))?.is_none() {
            self.backend.delete(&digest.to_hex()).await?;
        }
        Ok(())
    }

    fn staged_lock(&self) -> std::sync::MutexGuard<'_, HashMap<Digest, usize>> {
        self.staged.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_content_digest() {
        let blob = BlobRef::for_content(b"", "application/octet-stream");
        assert_eq!(
            blob.key(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(blob.size, 0);
    }

    #[test]
    fn refcount_rows() {
        let db = Database::open_in_memory().unwrap();
        let blob = BlobRef::for_content(b"x", "text/plain");
        db.write(|tx| retain(tx, &blob)).unwrap();
        assert_eq!(db.write(|tx| retain(tx, &blob)).unwrap(), 2);
        assert_eq!(db.write(|tx| release(tx, &blob.digest)).unwrap(), Some(1));
        assert_eq!(db.write(|tx| release(tx, &blob.digest)).unwrap(), Some(0));
        assert_eq!(db.write(|tx| release(tx, &blob.digest)).unwrap(), None);
    }
}
