use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use async_trait::async_trait;

use super::{BackendError, BlobBackend};

/// Stores objects at `<root>/<first 2 hex>/<digest>`.
#[derive(Debug, Clone)]
pub struct FsBackend {
    root: PathBuf,
}

impl FsBackend {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsBackend { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let prefix = key.get(..2).unwrap_or(key);
        self.root.join(prefix).join(key)
    }
}

fn unavailable(e: std::io::Error) -> BackendError {
    BackendError::Unavailable(e.to_string())
}

#[async_trait]
impl BlobBackend for FsBackend {
    fn name(&self) -> &str {
        "fs"
    }

    async fn put(&self, key: &str, bytes: &[u8]) -> Result<(), BackendError> {
        let path = self.path_for(key);
        let dir = path.parent().expect("object path has a parent");
        tokio::fs::create_dir_all(dir).await.map_err(unavailable)?;
        // write-then-rename so readers never observe a partial object
        let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
        tokio::fs::write(&tmp, bytes).await.map_err(unavailable)?;
        tokio::fs::rename(&tmp, &path).await.map_err(unavailable)
    }

    async fn get(&self, key: &str) -> Result<Option<Vec<u8>>, BackendError> {
        match tokio::fs::read(self.path_for(key)).await {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == ErrorKind::NotFound => {
                // a missing root means the backend itself is gone
                if tokio::fs::metadata(&self.root).await.is_err() {
                    Err(BackendError::Unavailable(format!(
                        "blob root {} is not accessible",
                        self.root.display()
                    )))
                } else {
                    Ok(None)
                }
            }
            Err(e) => Err(unavailable(e)),
        }
    }

    async fn exists(&self, key: &str) -> Result<bool, BackendError> {
        Ok(self.get(key).await?.is_some())
    }

    async fn delete(&self, key: &str) -> Result<(), BackendError> {
        match tokio::fs::remove_file(self.path_for(key)).await {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(()),
            Err(e) => Err(unavailable(e)),
        }
    }
}
