#![allow(dead_code)]

use std::sync::Arc;

use lore_core::index::{HashEmbedder, Index};
use lore_core::ingest::{ChunkPolicy, Extractors, Ingestor};
use lore_core::storage::{BlobBackend, BlobStore, FsBackend};
use lore_core::Database;

pub struct Stack {
    pub db: Arc<Database>,
    pub ingestor: Ingestor,
    pub dir: tempfile::TempDir,
}

pub fn stack(policy: ChunkPolicy) -> Stack {
    let dir = tempfile::tempdir().unwrap();
    let backend: Arc<dyn BlobBackend> = Arc::new(FsBackend::new(dir.path()));
    stack_with(policy, backend, Extractors::standard(), dir)
}

pub fn stack_with(policy: ChunkPolicy, backend: Arc<dyn BlobBackend>, extractors: Extractors, dir: tempfile::TempDir) -> Stack {
    let db = Arc::new(Database::open_in_memory().unwrap());
    let index = Index::new(db.clone(), Arc::new(HashEmbedder::default()));
    let blobs = BlobStore::new(db.clone(), backend);
    let ingestor = Ingestor::new(index, blobs, extractors, policy).unwrap();
    Stack { db, ingestor, dir }
}

/// Every row of every table, for before/after comparisons.
pub fn snapshot(db: &Database) -> Vec<String> {
    db.read(|c| -> rusqlite::Result<Vec<String>> {
        let tables: Vec<String> = {
            let mut stmt = c.prepare("SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name")?;
            let rows = stmt.query_map([], |r| r.get(0))?;
            rows.collect::<rusqlite::Result<_>>()?
        };
        let mut out = Vec::new();
        for t in tables {
            let mut stmt = c.prepare(&format!("SELECT * FROM \"{t}\" ORDER BY 1"))?;
            let n = stmt.column_count();
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                let cells: Vec<String> = (0..n)
                    .map(|i| format!("{:?}", row.get_ref(i).unwrap()))
                    .collect();
                out.push(format!("{t}: {}", cells.join(" | ")));
            }
        }
        Ok(out)
    })
    .unwrap()
}

/// Relative paths of every file under `root`.
pub fn files_under(root: &std::path::Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().display().to_string());
            }
        }
    }
    out.sort();
    out
}
