use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("embedding provider broke its contract: {0}")]
    Contract(String),
}

/// Maps texts to fixed-dimension vectors.
///
/// Implementations must return one vector per input, each of length
/// [`Embedder::dimension`], and be deterministic for a given `embedder_id`.
#[async_trait]
pub trait Embedder: Send + Sync {
    fn embedder_id(&self) -> &str;
    fn dimension(&self) -> usize;
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

/// Calls `embedder` and checks the count and dimension of what comes back.
pub async fn embed_checked(
    embedder: &dyn Embedder,
    texts: &[String],
) -> Result<Vec<Vec<f32>>, EmbedError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let out = embedder.embed(texts).await?;
    if out.len() != texts.len() {
        return Err(EmbedError::Contract(format!(
            "{} vectors for {} inputs",
            out.len(),
            texts.len()
        )));
    }
    if let Some(bad) = out.iter().find(|v| v.len() != embedder.dimension()) {
        return Err(EmbedError::Contract(format!(
            "vector of dimension {} from an embedder declaring {}",
            bad.len(),
            embedder.dimension()
        )));
    }
    Ok(out)
}

/// Bag-of-tokens embedder: each lowercased whitespace token is hashed
/// (FNV-1a) into one of `dimension` buckets, counts are L2-normalized.
/// Text without tokens maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    id: String,
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder {
            id: format!("hash-{dimension}"),
            dimension,
        }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut counts = vec![0f32; self.dimension];
        for token in text.split_whitespace() {
            let bucket = fnv1a(token.to_lowercase().as_bytes()) % self.dimension as u64;
            counts[bucket as usize] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f32>().sqrt();
        if norm > 0.0 {
            counts.iter_mut().for_each(|c| *c /= norm);
        }
        counts
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(64)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[async_trait]
impl Embedder for HashEmbedder {
    fn embedder_id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Client for an OpenAI-compatible `POST {base_url}/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    id: String,
    base_url: String,
    model: String,
    api_key: Option<String>,
    dimension: usize,
    batch_size: usize,
    http: reqwest::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: Option<usize>,
    embedding: Vec<f32>,
}

impl HttpEmbedder {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, dimension: usize) -> Self {
        HttpEmbedder {
            id: format!("http:{model}"),
            base_url: base_url.trim_end_matches('/').to_owned(),
            model: model.to_owned(),
            api_key,
            dimension,
            batch_size: 64,
            http: reqwest::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("reqwest client builds"),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    async fn embed_batch(&self, batch: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut req = self
            .http
            .post(format!("{}/embeddings", self.base_url))
            .json(&serde_json::json!({ "model": self.model, "input": batch }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(EmbedError::Provider(format!(
                "HTTP {status}: {}",
                body.chars().take(300).collect::<String>()
            )));
        }
        let mut parsed: EmbeddingResponse = resp
            .json()
            .await
            .map_err(|e| EmbedError::Provider(format!("bad embeddings response: {e}")))?;
        parsed.data.sort_by_key(|d| d.index.unwrap_or(0));
        Ok(parsed.data.into_iter().map(|d| d.embedding).collect())
    }
}

#[async_trait]
impl Embedder for HttpEmbedder {
    fn embedder_id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            out.extend(self.embed_batch(batch).await?);
        }
        Ok(out)
    }
}
