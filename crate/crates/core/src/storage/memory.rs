use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;

use super::{BackendError, BlobBackend};

/// Process-local objects. For tests and throwaway deployments.
#[derive(Debug)]
pub struct MemoryBackend {
    objects: Mutex<HashMap<String, Vec<u8>>>,
    down: AtomicBool,
}

impl Default for MemoryBackend {
    fn default() -> Self {
        MemoryBackend {
            objects: Mutex::default(),
            down: AtomicBool::new(false),
        }
    }
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// While unavailable every call fails with [`BackendError::Unavailable`].
    pub fn set_available(&self, up: bool) {
        self.down.store(!up, Ordering::SeqCst);
    }

    fn check(&self) -> Result<(), BackendError> {
        if self.down.load(Ordering::SeqCst) {
            Err(BackendError::Unavailable("memory backend switched off".into()))
        } else {
            Ok(())
        }
    }

    pub fn len(&self) -> usize {
        self.objects.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[async_trait]
impl BlobBackend for MemoryBackend {
    fn name(&self) -> &str {
        "memory"
    }

    async fn put(&self, key: &str, bytes: &[u8]) -> Result<(), BackendError> {
        self.check()?;
        self.objects
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(key.to_owned(), bytes.to_vec());
        Ok(())
    }

    async fn get(&self, key: &str) -> Result<Option<Vec<u8>>, BackendError> {
        self.check()?;
        Ok(self.objects.lock().unwrap_or_else(|p| p.into_inner()).get(key).cloned())
    }

    async fn exists(&self, key: &str) -> Result<bool, BackendError> {
        self.check()?;
        Ok(self.objects.lock().unwrap_or_else(|p| p.into_inner()).contains_key(key))
    }

    async fn delete(&self, key: &str) -> Result<(), BackendError> {
        self.check()?;
        self.objects.lock().unwrap_or_else(|p| p.into_inner()).remove(key);
        Ok(())
    }
}
