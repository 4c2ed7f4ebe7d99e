use std::sync::Arc;

use lore_agent::{Agent, AgentConfig, AgentError, DEFAULT_SYSTEM_PROMPT};
use lore_core::index::{Embedder, FusionWeights, HashEmbedder, HttpEmbedder, Index};
use lore_core::ingest::{ArxivClient, Extractors, IngestError, Ingestor};
use lore_core::model::Model;
use lore_core::storage::{BackendError, BlobBackend, BlobStore, FsBackend, MemoryBackend, S3Backend};
use lore_core::Database;
use lore_llm::{OpenAiAdapter, OpenAiConfig, ProviderAdapter, ProviderError, ScriptedProvider};
use thiserror::Error;

use crate::auth::{AuthError, TokenStore};
use crate::config::{BlobConfig, Config, EmbedderConfig, ProviderConfig};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("cannot open database: {0}")]
    Db(#[from] rusqlite::Error),
    #[error(transparent)]
    Blob(#[from] BackendError),
    #[error("cannot load provider script {path}: {reason}")]
    Script { path: String, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

/// Everything a request handler needs. Cheap to clone.
#[derive(Clone, Debug)]
pub struct App {
    pub ingestor: Ingestor,
    pub agent: Agent,
    pub tokens: TokenStore,
}

impl App {
    pub fn new(ingestor: Ingestor, provider: Arc<dyn ProviderAdapter>, config: AgentConfig) -> Result<App, StartupError> {
        let tokens = TokenStore::new(ingestor.model().db().clone())?;
        let agent = Agent::new(ingestor.index().clone(), provider, config)?;
        Ok(App { ingestor, agent, tokens })
    }

    /// Opens the store, blob backend, embedder and provider named by `config`.
    pub fn from_config(config: &Config) -> Result<App, StartupError> {
        let db = Arc::new(Database::open(&config.database_url)?);
        let backend: Arc<dyn BlobBackend> = match &config.blob {
            BlobConfig::Fs { root } => {
                std::fs::create_dir_all(root)
                    .map_err(|e| BackendError::Unavailable(format!("cannot create blob root {}: {e}", root.display())))?;
                Arc::new(FsBackend::new(root))
            }
            BlobConfig::S3(s3) => Arc::new(S3Backend::new(s3)?),
            BlobConfig::Memory => Arc::new(MemoryBackend::new()),
        };
        let index = Index::new(db.clone(), embedder(&config.embedder));
        let blobs = BlobStore::new(db, backend);
        let ingestor = Ingestor::new(index, blobs, Extractors::standard(), config.chunk_policy)?
            .with_arxiv(ArxivClient::http(&config.arxiv_endpoint));
        let agent_config = AgentConfig {
            max_tool_rounds: config.max_tool_rounds,
            weights: config.weights,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_owned(),
        };
        App::new(ingestor, provider(&config.provider)?, agent_config)
    }

    pub fn model(&self) -> &Model {
        self.ingestor.model()
    }

    pub fn index(&self) -> &Index {
        self.ingestor.index()
    }

    pub fn weights(&self) -> FusionWeights {
        self.agent.config().weights
    }
}

pub fn embedder(config: &EmbedderConfig) -> Arc<dyn Embedder> {
    match config {
        EmbedderConfig::Hash { dim } => Arc::new(HashEmbedder::new(*dim)),
        EmbedderConfig::Http { url, model, key, dim } => Arc::new(HttpEmbedder::new(url, model, key.clone(), *dim)),
    }
}

pub fn provider(config: &ProviderConfig) -> Result<Arc<dyn ProviderAdapter>, StartupError> {
    Ok(match config {
        ProviderConfig::Scripted { script } => {
            let fail = |reason: String| StartupError::Script {
                path: script.display().to_string(),
                reason,
            };
            let text = std::fs::read_to_string(script).map_err(|e| fail(e.to_string()))?;
            Arc::new(ScriptedProvider::from_json(&text).map_err(|e: ProviderError| fail(e.to_string()))?)
        }
        ProviderConfig::OpenAi {
            base_url,
            model,
            key,
            timeout,
            stream,
        } => {
            let mut c = OpenAiConfig::new(base_url.as_str(), model.as_str());
            c.api_key = key.clone();
            c.timeout = *timeout;
            c.stream = *stream;
            Arc::new(OpenAiAdapter::new(c))
        }
    })
}
