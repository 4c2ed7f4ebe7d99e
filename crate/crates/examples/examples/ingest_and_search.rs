//! Ingest notes, then run hybrid vector + trigram search with different weights.
//!
//! cargo run -p lore-examples --example ingest_and_search

use lore_core::index::FusionWeights;
use lore_examples::{print_hits, sample_library};

#[tokio::main]
async fn main() {
    let lib = sample_library().await;
    let model = lib.ingestor.model();
    println!(
        "{} documents, {} chunks in {:?}",
        model.document_count().unwrap(),
        model.chunk_count().unwrap(),
        model.collection(lib.notebook).unwrap().name
    );
    let scope = [lib.notebook].into();
    for (label, alpha) in [("lexical only", 0.0), ("default blend", 0.7), ("vector only", 1.0)] {
        let w = FusionWeights {
            alpha,
            ..FusionWeights::default()
        }
        .with_k(3);
        let hits = lib.ingestor.index().hybrid_search("telescop calibration", &scope, lib.owner, w).await.unwrap();
        println!("{label} (alpha {alpha}):");
        print_hits(&hits);
    }

    // someone without access gets an error, not an empty list
    let stranger = model.ensure_principal("stranger").unwrap().id;
    let denied = lib
        .ingestor
        .index()
        .hybrid_search("quasars", &scope, stranger, FusionWeights::default())
        .await;
    println!("stranger: {}", denied.unwrap_err());

    let doc = model.documents_in(lib.notebook).unwrap().remove(0);
    let gone = lib.ingestor.delete_document(doc.id, lib.owner).await.unwrap();
    println!(
        "deleted {:?}: {} chunks removed, {} chunks left, {} orphans",
        doc.title,
        gone.chunks_removed,
        model.chunk_count().unwrap(),
        model.orphan_chunks().unwrap().len()
    );
}
