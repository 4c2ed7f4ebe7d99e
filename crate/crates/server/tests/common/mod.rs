#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use lore_agent::AgentConfig;
use lore_core::index::{HashEmbedder, Index};
use lore_core::ingest::{ArxivClient, ChunkPolicy, Extractors, Ingestor};
use lore_core::model::{Model, PermissionLevel};
use lore_core::storage::{BlobStore, MemoryBackend};
use lore_core::{CollectionId, Database, PrincipalId};
use lore_llm::ProviderAdapter;
use lore_server::App;
use lore_testkit::oracle::PermissionWorld;
use lore_testkit::Served;
use reqwest::{Method, RequestBuilder, StatusCode};
use serde_json::Value;

pub mod matrix;

pub struct Server {
    pub app: App,
    pub served: Served,
    pub http: reqwest::Client,
}

pub fn app(provider: Arc<dyn ProviderAdapter>, arxiv: Option<ArxivClient>, max_tool_rounds: usize) -> App {
    let db = Arc::new(Database::open_in_memory().unwrap());
    let index = Index::new(db.clone(), Arc::new(HashEmbedder::default()));
    let blobs = BlobStore::new(db, Arc::new(MemoryBackend::new()));
    let mut ingestor =
        Ingestor::new(index, blobs, Extractors::standard(), ChunkPolicy::new(120, 20).unwrap()).unwrap();
    if let Some(a) = arxiv {
        ingestor = ingestor.with_arxiv(a);
    }
    let config = AgentConfig {
        max_tool_rounds,
        ..AgentConfig::default()
    };
    App::new(ingestor, provider, config).unwrap()
}

pub async fn start(app: App) -> Server {
    let served = lore_testkit::serve(lore_server::api::router(app.clone())).await;
    Server {
        app,
        served,
        http: reqwest::Client::new(),
    }
}

impl Server {
    pub fn model(&self) -> &Model {
        self.app.model()
    }

    /// Creates (or finds) a user and issues a token.
    pub fn user(&self, name: &str) -> (PrincipalId, String) {
        let p = self.model().ensure_principal(name).unwrap().id;
        (p, self.app.tokens.create(p).unwrap())
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.served.url())
    }

    pub fn ws_url(&self, query: &str) -> String {
        format!("ws://{}/ws/chat?{query}", self.served.addr)
    }

    pub fn req(&self, method: Method, path: &str, token: Option<&str>) -> RequestBuilder {
        let r = self.http.request(method, self.url(path));
        match token {
            Some(t) => r.bearer_auth(t),
            None => r,
        }
    }

    pub async fn upload(&self, token: &str, collection: CollectionId, title: &str, text: &str) -> (StatusCode, Value) {
        let form = reqwest::multipart::Form::new()
            .part(
                "file",
                reqwest::multipart::Part::bytes(text.as_bytes().to_vec())
                    .file_name("note.txt")
                    .mime_str("text/plain")
                    .unwrap(),
            )
            .text("kind", "note")
            .text("title", title.to_owned())
            .text("collection_id", collection.to_string());
        let r = self
            .req(Method::POST, "/documents", Some(token))
            .multipart(form)
            .send()
            .await
            .unwrap();
        split(r).await
    }
}

/// Status and JSON body (Null when the body is empty or not JSON).
pub async fn split(r: reqwest::Response) -> (StatusCode, Value) {
    let status = r.status();
    let text = r.text().await.unwrap();
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

/// Fails unless `body` is exactly an error envelope with `code`.
pub fn assert_envelope(body: &Value, code: &str) {
    let obj = body.as_object().unwrap_or_else(|| panic!("not an envelope: {body}"));
    assert_eq!(obj.len(), 2, "{body}");
    assert_eq!(obj["code"], code, "{body}");
    assert!(obj["message"].as_str().is_some_and(|m| !m.is_empty()), "{body}");
}

pub fn set(ids: &[CollectionId]) -> BTreeSet<CollectionId> {
    ids.iter().copied().collect()
}

pub fn level(l: PermissionLevel) -> u8 {
    match l {
        PermissionLevel::None => 0,
        PermissionLevel::View => 1,
        PermissionLevel::Edit => 2,
    }
}

/// A random forest of collections plus VIEW/EDIT grants, built through the model.
pub struct World {
    pub people: Vec<PrincipalId>,
    pub ids: Vec<CollectionId>,
    pub oracle: PermissionWorld,
}

/// `nodes[i] = (parent index below i, owner)`; `grants = (collection, principal, edit)`.
pub fn build_world(model: &Model, people: Vec<PrincipalId>, nodes: &[(Option<usize>, usize)], grants: &[(usize, usize, bool)]) -> World {
    let ids: Vec<CollectionId> = nodes
        .iter()
        .enumerate()
        .map(|(i, &(_, owner))| model.create_collection(&format!("c{i}"), people[owner], None).unwrap().id)
        .collect();
    let mut oracle = PermissionWorld {
        parent: vec![None; ids.len()],
        owner: nodes.iter().map(|&(_, o)| o).collect(),
        ..Default::default()
    };
    for (i, &(parent, owner)) in nodes.iter().enumerate() {
        let Some(p) = parent else { continue };
        let parent_owner = nodes[p].1;
        let temporary = parent_owner != owner && oracle.effective(owner, p) < 2;
        if temporary {
            model
                .grant_permission(ids[p], people[owner], PermissionLevel::Edit, people[parent_owner])
                .unwrap();
        }
        model.move_collection(ids[i], Some(ids[p]), people[owner]).unwrap();
        if temporary {
            model.revoke_permission(ids[p], people[owner], people[parent_owner]).unwrap();
        }
        oracle.parent[i] = Some(p);
    }
    for &(c, who, edit) in grants {
        let owner = oracle.owner[c];
        if who == owner {
            continue;
        }
        let lvl = if edit { PermissionLevel::Edit } else { PermissionLevel::View };
        model.grant_permission(ids[c], people[who], lvl, people[owner]).unwrap();
        oracle.grants.insert((c, who), level(lvl));
    }
    World { people, ids, oracle }
}
