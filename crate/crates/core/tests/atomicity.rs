//! A failed ingest leaves the store exactly as it was.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use lore_core::index::{EmbedError, Embedder, HashEmbedder, Index};
use lore_core::ingest::{ChunkPolicy, Extractors, IngestError, IngestHook, Ingestor, Source, Stage};
use lore_core::model::DocumentKind;
use lore_core::storage::{BlobStore, FsBackend};
use lore_core::{CollectionId, Database, PrincipalId};
use lore_testkit::fixtures::{lorem, pdf_with_lines};
use lore_testkit::s3::MockS3;

struct FailAt(Stage);

impl IngestHook for FailAt {
    fn before(&self, stage: Stage) -> Result<(), String> {
        if stage == self.0 {
            Err(format!("injected at {stage:?}"))
        } else {
            Ok(())
        }
    }
}

/// Seeds a store with one document whose blob the failing ingest would share.
async fn seeded(ing: &Ingestor) -> (PrincipalId, CollectionId, CollectionId) {
    let model = ing.model();
    let owner = model.ensure_principal("o").unwrap().id;
    let c1 = model.create_collection("one", owner, None).unwrap().id;
    let c2 = model.create_collection("two", owner, None).unwrap().id;
    ing.ingest_document(upload(&lorem(1, 300)), c1, None, owner).await.unwrap();
    (owner, c1, c2)
}

fn upload(text: &str) -> Source {
    Source::Upload {
        bytes: text.as_bytes().to_vec(),
        kind: DocumentKind::Note,
        media_type: None,
    }
}

#[tokio::test]
async fn failure_at_every_stage_changes_nothing() {
    for stage in Stage::ALL {
        for shared_blob in [false, true] {
            let s = common::stack(ChunkPolicy::new(200, 20).unwrap());
            let (owner, _c1, c2) = seeded(&s.ingestor).await;
            let text = if shared_blob { lorem(1, 300) } else { lorem(2, 300) };
            let before = (common::snapshot(&s.db), common::files_under(s.dir.path()));

            let failing = s.ingestor.clone().with_hook(Arc::new(FailAt(stage)));
            let err = failing.ingest_document(upload(&text), c2, None, owner).await.unwrap_err();
            assert!(matches!(err, IngestError::Aborted { stage: st, .. } if st == stage), "{stage:?}: {err:?}");

            let after = (common::snapshot(&s.db), common::files_under(s.dir.path()));
            assert_eq!(before, after, "store changed after failure at {stage:?}");

            // and the same ingest succeeds once the fault is gone
            s.ingestor.ingest_document(upload(&text), c2, None, owner).await.unwrap();
        }
    }
}

struct Flaky {
    inner: HashEmbedder,
    calls: AtomicUsize,
    fail_on: usize,
    wrong_dimension: bool,
}

#[async_trait]
impl Embedder for Flaky {
    fn embedder_id(&self) -> &str {
        self.inner.embedder_id()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n == self.fail_on {
            if self.wrong_dimension {
                return Ok(texts.iter().map(|_| vec![1.0; 3]).collect());
            }
            return Err(EmbedError::Provider("provider went away".into()));
        }
        self.inner.embed(texts).await
    }
}

#[tokio::test]
async fn embedding_failures_persist_nothing() {
    for wrong_dimension in [false, true] {
        let db = Arc::new(Database::open_in_memory().unwrap());
        let dir = tempfile::tempdir().unwrap();
        let embedder = Arc::new(Flaky {
            inner: HashEmbedder::default(),
            calls: AtomicUsize::new(0),
            fail_on: 1,
            wrong_dimension,
        });
        let ing = Ingestor::new(
            Index::new(db.clone(), embedder),
            BlobStore::new(db.clone(), Arc::new(FsBackend::new(dir.path()))),
            Extractors::text_only(),
            ChunkPolicy::new(100, 10).unwrap(),
        )
        .unwrap();
        let (owner, _, c2) = seeded(&ing).await;
        let before = (common::snapshot(&db), common::files_under(dir.path()));
        let err = ing.ingest_document(upload(&lorem(9, 200)), c2, None, owner).await.unwrap_err();
        assert!(matches!(err, IngestError::Embedding(_)), "{err:?}");
        assert_eq!(before, (common::snapshot(&db), common::files_under(dir.path())));
    }
}

#[tokio::test]
async fn extraction_failure_persists_nothing() {
    let s = common::stack(ChunkPolicy::default());
    let (owner, c1, _) = seeded(&s.ingestor).await;
    let before = (common::snapshot(&s.db), common::files_under(s.dir.path()));
    let err = s
        .ingestor
        .ingest_document(
            Source::Upload {
                bytes: b"%PDF-1.4 garbage".to_vec(),
                kind: DocumentKind::PdfText,
                media_type: None,
            },
            c1,
            None,
            owner,
        )
        .await
        .unwrap_err();
    assert!(matches!(err, IngestError::ExtractionFailed(_)));
    assert_eq!(before, (common::snapshot(&s.db), common::files_under(s.dir.path())));
    // a readable PDF still goes through afterwards
    s.ingestor
        .ingest_document(
            Source::Upload {
                bytes: pdf_with_lines(&["fine now"]),
                kind: DocumentKind::PdfText,
                media_type: None,
            },
            c1,
            None,
            owner,
        )
        .await
        .unwrap();
}

#[tokio::test]
async fn unavailable_blob_backend_persists_nothing() {
    let mock = MockS3::start().await;
    let backend = Arc::new(
        lore_core::storage::S3Backend::new(&lore_core::storage::S3Config {
            endpoint: mock.endpoint(),
            bucket: "b".into(),
            region: "us-east-1".into(),
            access_key: "k".into(),
            secret_key: "s".into(),
        })
        .unwrap(),
    );
    let s = common::stack_with(ChunkPolicy::default(), backend, Extractors::text_only(), tempfile::tempdir().unwrap());
    let (owner, c1, _) = seeded(&s.ingestor).await;
    let before = (common::snapshot(&s.db), mock.object_count());
    mock.set_available(false);
    let err = s.ingestor.ingest_document(upload("new text"), c1, None, owner).await.unwrap_err();
    assert!(matches!(err, IngestError::Storage(_)), "{err:?}");
    mock.set_available(true);
    assert_eq!(before, (common::snapshot(&s.db), mock.object_count()));
}

#[tokio::test]
async fn concurrent_ingests_each_commit() {
    let s = common::stack(ChunkPolicy::new(64, 8).unwrap());
    let (owner, c1, _) = seeded(&s.ingestor).await;
    let mut tasks = Vec::new();
    for i in 0..16u64 {
        let ing = s.ingestor.clone();
        tasks.push(tokio::spawn(async move {
            ing.ingest_document(upload(&lorem(100 + i, 50)), c1, None, owner).await
        }));
    }
    let mut chunks = 0;
    for t in tasks {
        let out = t.await.unwrap().unwrap();
        let stored = s.ingestor.model().chunks_of(out.document.id).unwrap();
        let seqs: Vec<u32> = stored.iter().map(|c| c.seq).collect();
        assert_eq!(seqs, (0..stored.len() as u32).collect::<Vec<_>>());
        chunks += out.chunk_ids.len();
    }
    assert_eq!(s.ingestor.model().document_count().unwrap(), 17);
    assert!(s.ingestor.model().orphan_chunks().unwrap().is_empty());
    assert!(s.ingestor.index().len().unwrap() as usize > chunks);
}
