#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use lore_agent::{Agent, AgentConfig};
use lore_core::index::{HashEmbedder, Index};
use lore_core::ingest::{ChunkPolicy, Extractors, Ingestor, Source};
use lore_core::model::{DocumentKind, Model};
use lore_core::storage::{BlobStore, MemoryBackend};
use lore_core::{CollectionId, Database, PrincipalId};
use lore_llm::ProviderAdapter;
use lore_testkit::fixtures::{lorem, CORPUS};

pub struct Library {
    pub ingestor: Ingestor,
    pub alice: PrincipalId,
    pub bob: PrincipalId,
    /// The ten-document corpus, owned by alice.
    pub papers: CollectionId,
    /// Filler documents, owned by alice.
    pub misc: CollectionId,
}

impl Library {
    pub fn model(&self) -> &Model {
        self.ingestor.model()
    }

    pub fn index(&self) -> &Index {
        self.ingestor.index()
    }

    pub fn agent(&self, provider: Arc<dyn ProviderAdapter>, max_tool_rounds: usize) -> Agent {
        let config = AgentConfig {
            max_tool_rounds,
            ..AgentConfig::default()
        };
        Agent::new(self.index().clone(), provider, config).unwrap()
    }
}

pub fn set(ids: &[CollectionId]) -> BTreeSet<CollectionId> {
    ids.iter().copied().collect()
}

pub async fn library() -> Library {
    let db = Arc::new(Database::open_in_memory().unwrap());
    let index = Index::new(db.clone(), Arc::new(HashEmbedder::default()));
    let blobs = BlobStore::new(db, Arc::new(MemoryBackend::new()));
    let ingestor = Ingestor::new(index, blobs, Extractors::text_only(), ChunkPolicy::new(120, 20).unwrap()).unwrap();
    let model = ingestor.model().clone();
    let alice = model.ensure_principal("alice").unwrap().id;
    let bob = model.ensure_principal("bob").unwrap().id;
    let papers = model.create_collection("papers", alice, None).unwrap().id;
    let misc = model.create_collection("misc", alice, None).unwrap().id;
    for (title, text) in CORPUS {
        note(&ingestor, papers, alice, title, text).await;
    }
    for seed in 0..3 {
        note(&ingestor, misc, alice, &format!("filler {seed}"), &lorem(seed, 60)).await;
    }
    Library {
        ingestor,
        alice,
        bob,
        papers,
        misc,
    }
}

pub async fn note(ingestor: &Ingestor, collection: CollectionId, caller: PrincipalId, title: &str, text: &str) {
    ingestor
        .ingest_document(
            Source::Upload {
                bytes: text.as_bytes().to_vec(),
                kind: DocumentKind::Note,
                media_type: None,
            },
            collection,
            Some(title.to_owned()),
            caller,
        )
        .await
        .unwrap();
}
