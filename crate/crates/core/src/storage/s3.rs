use std::time::Duration;

use async_trait::async_trait;
use reqwest::StatusCode;
use rusty_s3::{Bucket, Credentials, S3Action, UrlStyle};
use serde::{Deserialize, Serialize};

use super::{BackendError, BlobBackend};

const SIGNATURE_TTL: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct S3Config {
    /// e.g. `http://localhost:9000` for MinIO.
    pub endpoint: String,
    pub bucket: String,
    pub region: String,
    pub access_key: String,
    pub secret_key: String,
}

/// Any S3-compatible object store, addressed path-style with presigned requests.
#[derive(Debug, Clone)]
pub struct S3Backend {
    bucket: Bucket,
    credentials: Credentials,
    http: reqwest::Client,
}

impl S3Backend {
    pub fn new(config: &S3Config) -> Result<Self, BackendError> {
        let endpoint = config
            .endpoint
            .parse()
            .map_err(|e| BackendError::Unavailable(format!("bad S3 endpoint: {e}")))?;
        let bucket = Bucket::new(
            endpoint,
            UrlStyle::Path,
            config.bucket.clone(),
            config.region.clone(),
        )
        .map_err(|e| BackendError::Unavailable(format!("bad S3 bucket: {e}")))?;
        Ok(S3Backend {
            bucket,
            credentials: Credentials::new(config.access_key.clone(), config.secret_key.clone()),
            http: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .map_err(|e| BackendError::Unavailable(e.to_string()))?,
        })
    }
}

fn transport(e: reqwest::Error) -> BackendError {
    BackendError::Unavailable(e.to_string())
}

fn unexpected(op: &str, status: StatusCode) -> BackendError {
    BackendError::Unavailable(format!("S3 {op} returned {status}"))
}

#[async_trait]
impl BlobBackend for S3Backend {
    fn name(&self) -> &str {
        "s3"
    }

    async fn put(&self, key: &str, bytes: &[u8]) -> Result<(), BackendError> {
        let url = self
            .bucket
            .put_object(Some(&self.credentials), key)
            .sign(SIGNATURE_TTL);
        let resp = self
            .http
            .put(url)
            .body(bytes.to_vec())
            .send()
            .await
            .map_err(transport)?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(unexpected("PUT", resp.status()))
        }
    }

    async fn get(&self, key: &str) -> Result<Option<Vec<u8>>, BackendError> {
        let url = self
            .bucket
            .get_object(Some(&self.credentials), key)
            .sign(SIGNATURE_TTL);
        let resp = self.http.get(url).send().await.map_err(transport)?;
        match resp.status() {
            StatusCode::NOT_FOUND => Ok(None),
            s if s.is_success() => Ok(Some(resp.bytes().await.map_err(transport)?.to_vec())),
            s => Err(unexpected("GET", s)),
        }
    }

    async fn exists(&self, key: &str) -> Result<bool, BackendError> {
        let url = self
            .bucket
            .head_object(Some(&self.credentials), key)
            .sign(SIGNATURE_TTL);
        let resp = self.http.head(url).send().await.map_err(transport)?;
        match resp.status() {
            StatusCode::NOT_FOUND => Ok(false),
            s if s.is_success() => Ok(true),
            s => Err(unexpected("HEAD", s)),
        }
    }

    async fn delete(&self, key: &str) -> Result<(), BackendError> {
        let url = self
            .bucket
            .delete_object(Some(&self.credentials), key)
            .sign(SIGNATURE_TTL);
        let resp = self.http.delete(url).send().await.map_err(transport)?;
        match resp.status() {
            StatusCode::NOT_FOUND => Ok(()),
            s if s.is_success() => Ok(()),
            s => Err(unexpected("DELETE", s)),
        }
    }
}
