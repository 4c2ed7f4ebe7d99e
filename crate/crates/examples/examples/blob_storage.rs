//! Content-addressed blob storage on the filesystem, with deduplication and
//! integrity checks.
//!
//! cargo run -p lore-examples --example blob_storage

use std::sync::Arc;

use lore_core::storage::{BlobStore, FsBackend};
use lore_core::Database;

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::new(Arc::new(Database::open_in_memory().unwrap()), Arc::new(FsBackend::new(dir.path())));

    let empty = store.put_blob(b"", "application/octet-stream").await.unwrap();
    println!("empty blob digest {}", empty.digest.to_hex());

    let a = store.put_blob(b"lab notebook page 1", "text/plain").await.unwrap();
    let b = store.put_blob(b"lab notebook page 1", "text/plain").await.unwrap();
    println!("same bytes twice -> same key {} ({} references)", a.key() == b.key(), store.refcount(&a.digest).unwrap());

    let backend = FsBackend::new(dir.path());
    println!("stored at {}", backend.path_for(&a.key()).strip_prefix(dir.path()).unwrap().display());

    std::fs::write(backend.path_for(&a.key()), b"edited behind our back").unwrap();
    println!("after tampering: {}", store.get_blob(&a).await.unwrap_err());

    store.release_blob(&a).await.unwrap();
    let left = store.release_blob(&b).await.unwrap();
    println!("released both references, {left} left; object exists: {}", backend.path_for(&a.key()).exists());
}
