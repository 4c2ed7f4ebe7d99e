//! Shared setup for the examples: an in-memory library with a few notes.

use std::sync::Arc;

use lore_core::index::{ChunkHit, HashEmbedder, Index};
use lore_core::ingest::{ChunkPolicy, Extractors, Ingestor, Source};
use lore_core::model::DocumentKind;
use lore_core::storage::{BlobStore, MemoryBackend};
use lore_core::{CollectionId, Database, PrincipalId};

pub const NOTES: [(&str, &str); 5] = [
    (
        "Centrifuge log",
        "The centrifuge was recalibrated on Monday. Spin speed drifted by two percent \
         after the rotor swap, so every run this week used the manual override.",
    ),
    (
        "Attention reading group",
        "We read the transformer article. Multi-head attention lets each layer attend to \
         several positions at once; positional encodings replace recurrence.",
    ),
    (
        "Telescope time",
        "Observing proposal accepted for three nights. Targets are two faint quasars and \
         a comparison star for photometric calibration.",
    ),
    (
        "Protein folding notes",
        "Graph neural networks over residue contact maps predicted the fold of the small \
         domain within two angstroms.",
    ),
    (
        "Seminar schedule",
        "Bayesian inference seminar moves to Thursdays. Bring a dataset you want to \
         discuss; priors will be argued about at length.",
    ),
];

/// Everything held in memory, with a small chunk size so notes split.
pub fn memory_ingestor() -> Ingestor {
    let db = Arc::new(Database::open_in_memory().expect("in-memory database"));
    let index = Index::new(db.clone(), Arc::new(HashEmbedder::default()));
    let blobs = BlobStore::new(db, Arc::new(MemoryBackend::new()));
    Ingestor::new(index, blobs, Extractors::standard(), ChunkPolicy::new(160, 40).expect("valid policy"))
        .expect("ingestor")
}

pub struct Library {
    pub ingestor: Ingestor,
    pub owner: PrincipalId,
    pub notebook: CollectionId,
}

/// One user, one collection, and [`NOTES`] ingested into it.
pub async fn sample_library() -> Library {
    let ingestor = memory_ingestor();
    let owner = ingestor.model().ensure_principal("ada").expect("principal").id;
    let notebook = ingestor
        .model()
        .create_collection("lab notebook", owner, None)
        .expect("collection")
        .id;
    for (title, text) in NOTES {
        let source = Source::Upload {
            bytes: text.as_bytes().to_vec(),
            kind: DocumentKind::Note,
            media_type: None,
        };
        ingestor
            .ingest_document(source, notebook, Some(title.to_owned()), owner)
            .await
            .expect("ingest");
    }
    Library {
        ingestor,
        owner,
        notebook,
    }
}

pub fn print_hits(hits: &[ChunkHit]) {
    for h in hits {
        let snippet: String = h.snippet.chars().take(60).collect();
        println!(
            "  {:.3}  (cos {:+.3}, tri {:.3})  {:<24} {snippet}...",
            h.fused_score, h.cosine_score, h.trigram_score, h.document_title
        );
    }
}
