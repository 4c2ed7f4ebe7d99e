//! The single relational store.
//!
//! All mutations go through [`Database::write`], which runs the closure inside
//! an immediate transaction and commits only when it returns `Ok`. Uniqueness,
//! foreign keys and cascades are declared in the schema so the store, not the
//! callers, is what enforces them.

use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use rusqlite::{Connection, Transaction, TransactionBehavior};

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS principals (
    id           INTEGER PRIMARY KEY AUTOINCREMENT,
    display_name TEXT NOT NULL UNIQUE CHECK (display_name <> '')
);

CREATE TABLE IF NOT EXISTS collections (
    id         INTEGER PRIMARY KEY AUTOINCREMENT,
    name       TEXT NOT NULL CHECK (name <> ''),
    owner      INTEGER NOT NULL REFERENCES principals(id),
    parent     INTEGER REFERENCES collections(id) ON DELETE RESTRICT,
    created_at TEXT NOT NULL
);
CREATE UNIQUE INDEX IF NOT EXISTS collections_child_name
    ON collections(parent, name) WHERE parent IS NOT NULL;
CREATE UNIQUE INDEX IF NOT EXISTS collections_root_name
    ON collections(owner, name) WHERE parent IS NULL;

CREATE TABLE IF NOT EXISTS grants (
    collection INTEGER NOT NULL REFERENCES collections(id) ON DELETE CASCADE,
    principal  INTEGER NOT NULL REFERENCES principals(id) ON DELETE CASCADE,
    level      TEXT NOT NULL CHECK (level IN ('VIEW', 'EDIT')),
    PRIMARY KEY (collection, principal)
);

CREATE TABLE IF NOT EXISTS blobs (
    digest     TEXT PRIMARY KEY,
    size       INTEGER NOT NULL,
    media_type TEXT NOT NULL,
    refcount   INTEGER NOT NULL CHECK (refcount > 0)
);

CREATE TABLE IF NOT EXISTS documents (
    id             INTEGER PRIMARY KEY AUTOINCREMENT,
    collection     INTEGER NOT NULL REFERENCES collections(id) ON DELETE RESTRICT,
    kind           TEXT NOT NULL,
    title          TEXT NOT NULL,
    source_meta    TEXT NOT NULL,
    content_hash   BLOB NOT NULL CHECK (length(content_hash) = 32),
    canonical_text TEXT NOT NULL,
    blob_digest    TEXT REFERENCES blobs(digest),
    ingested_at    TEXT NOT NULL,
    UNIQUE (collection, content_hash)
);

CREATE TABLE IF NOT EXISTS chunks (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    document    INTEGER NOT NULL REFERENCES documents(id) ON DELETE CASCADE,
    seq         INTEGER NOT NULL CHECK (seq >= 0),
    span_start  INTEGER NOT NULL CHECK (span_start >= 0),
    span_end    INTEGER NOT NULL CHECK (span_end > span_start),
    text        TEXT NOT NULL,
    embedder_id TEXT NOT NULL,
    UNIQUE (document, seq)
);

CREATE TABLE IF NOT EXISTS vector_index (
    chunk_id    INTEGER PRIMARY KEY REFERENCES chunks(id) ON DELETE CASCADE,
    document_id INTEGER NOT NULL,
    collection  INTEGER NOT NULL,
    embedder_id TEXT NOT NULL,
    embedding   BLOB NOT NULL
);
CREATE INDEX IF NOT EXISTS vector_index_document ON vector_index(document_id);
CREATE INDEX IF NOT EXISTS vector_index_collection ON vector_index(collection);

CREATE TABLE IF NOT EXISTS trigram_sets (
    chunk_id    INTEGER PRIMARY KEY REFERENCES chunks(id) ON DELETE CASCADE,
    document_id INTEGER NOT NULL,
    size        INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS trigram_sets_document ON trigram_sets(document_id);

CREATE TABLE IF NOT EXISTS trigram_index (
    gram     TEXT NOT NULL,
    chunk_id INTEGER NOT NULL REFERENCES chunks(id) ON DELETE CASCADE,
    PRIMARY KEY (gram, chunk_id)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS trigram_index_chunk ON trigram_index(chunk_id);

CREATE TABLE IF NOT EXISTS index_meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"#;

/// Handle to the relational store.
///
/// A single connection guarded by a mutex: every operation, read or write,
/// observes a consistent snapshot and writes are serialized.
pub struct Database {
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for Database {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Database").finish_non_exhaustive()
    }
}

impl Database {
    pub fn open_in_memory() -> rusqlite::Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    pub fn open_path(path: impl AsRef<Path>) -> rusqlite::Result<Self> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    /// Opens a database from a URL: `sqlite::memory:`, `sqlite://<path>` or a bare path.
    pub fn open(url: &str) -> rusqlite::Result<Self> {
        let url = url.trim();
        match url {
            "sqlite::memory:" | ":memory:" => Self::open_in_memory(),
            _ => Self::open_path(url.strip_prefix("sqlite://").unwrap_or(url)),
        }
    }

    fn init(conn: Connection) -> rusqlite::Result<Self> {
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Database {
            conn: Mutex::new(conn),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Connection> {
        // A panic while holding the lock cannot leave a half-applied
        // transaction behind (it is rolled back on drop), so poisoning is ignored.
        self.conn.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Runs `f` against a read-only view of the store.
    pub fn read<T, E>(&self, f: impl FnOnce(&Connection) -> Result<T, E>) -> Result<T, E> {
        let conn = self.lock();
        f(&conn)
    }

    /// Runs `f` in a transaction, committing iff it returns `Ok`.
    pub fn write<T, E>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<rusqlite::Error>,
    {
        let mut conn = self.lock();
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    /// Extra schema owned by higher layers (e.g. API tokens).
    pub fn migrate(&self, sql: &str) -> rusqlite::Result<()> {
        self.lock().execute_batch(sql)
    }
}

/// True when `err` is a violation of a UNIQUE or PRIMARY KEY constraint.
pub(crate) fn is_unique_violation(err: &rusqlite::Error) -> bool {
    matches!(
        err,
        rusqlite::Error::SqliteFailure(e, _)
            if e.extended_code == rusqlite::ffi::SQLITE_CONSTRAINT_UNIQUE
                || e.extended_code == rusqlite::ffi::SQLITE_CONSTRAINT_PRIMARYKEY
    )
}

pub(crate) fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
