//! Index maintenance through the public API.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use lore_core::index::{FusionWeights, HashEmbedder, Index, IndexError};
use lore_core::ingest::{ChunkPolicy, IngestError, Source};
use lore_core::model::DocumentKind;
use lore_core::DocumentId;
use lore_testkit::fixtures::lorem;

fn note(text: &str) -> Source {
    Source::Upload {
        bytes: text.as_bytes().to_vec(),
        kind: DocumentKind::Note,
        media_type: None,
    }
}

#[tokio::test]
async fn upsert_is_idempotent_and_batches_are_all_or_nothing() {
    let s = common::stack(ChunkPolicy::new(400, 50).unwrap());
    let model = s.ingestor.model();
    let owner = model.ensure_principal("o").unwrap().id;
    let c = model.create_collection("c", owner, None).unwrap().id;
    let text: String = lorem(3, 400).chars().take(1000).collect();
    let doc = s.ingestor.ingest_document(note(&text), c, None, owner).await.unwrap();
    let index = s.ingestor.index();
    assert_eq!(index.len().unwrap(), 3);

    let chunks = model.chunks_of(doc.document.id).unwrap();
    index.index_chunks(&chunks).unwrap();
    index.index_chunks(&chunks).unwrap();
    assert_eq!(index.len().unwrap(), 3);
    index.index_chunks(&[]).unwrap();

    let before = common::snapshot(&s.db);
    let mut bad = chunks.clone();
    bad[2].embedding.pop();
    bad[0].text = "changed but must not be written".into();
    assert!(matches!(index.index_chunks(&bad), Err(IndexError::DimensionMismatch { expected: 64, got: 63 })));
    let mut foreign = chunks.clone();
    foreign[1].embedder_id = "other".into();
    assert!(matches!(index.index_chunks(&foreign), Err(IndexError::EmbedderMismatch { .. })));
    assert_eq!(before, common::snapshot(&s.db));

    assert_eq!(index.remove_chunks(DocumentId(9_999)).unwrap(), 0);
    assert_eq!(index.remove_chunks(doc.document.id).unwrap(), 3);
    assert!(index.is_empty().unwrap());
    let hits = index
        .hybrid_search(&text, &BTreeSet::from([c]), owner, FusionWeights::default())
        .await
        .unwrap();
    assert!(hits.is_empty());
}

#[tokio::test]
async fn switching_embedders_requires_reindex() {
    let s = common::stack(ChunkPolicy::new(200, 20).unwrap());
    let model = s.ingestor.model();
    let owner = model.ensure_principal("o").unwrap().id;
    let c = model.create_collection("c", owner, None).unwrap().id;
    for i in 0..5 {
        s.ingestor.ingest_document(note(&lorem(i, 80)), c, None, owner).await.unwrap();
    }
    let scope = BTreeSet::from([c]);
    let old = s.ingestor.index();
    let n = old.len().unwrap();
    assert_eq!(old.indexed_embedder().unwrap(), Some(("hash-64".into(), 64)));

    let new = Index::new(s.db.clone(), Arc::new(HashEmbedder::new(32)));
    assert!(matches!(
        new.hybrid_search("graph", &scope, owner, FusionWeights::default()).await,
        Err(IndexError::EmbedderMismatch { .. })
    ));
    let report = new.reindex().await.unwrap();
    assert_eq!(report.chunks, n);
    assert_eq!(report.embedder_id, "hash-32");
    assert_eq!(new.len().unwrap(), n);
    let hits = new.hybrid_search("graph", &scope, owner, FusionWeights::default()).await.unwrap();
    assert!(!hits.is_empty());
    assert!(model.chunks_of(hits[0].document_id).unwrap().iter().all(|c| c.embedding.len() == 32));

    // the old embedder is now the stale one
    let err = s.ingestor.ingest_document(note("fresh text"), c, None, owner).await.unwrap_err();
    assert!(matches!(err, IngestError::Index(IndexError::EmbedderMismatch { .. })), "{err:?}");
}
