//! Import a paper by arXiv id. Runs against a recorded feed and PDF by
//! default; pass `--live <id>` to query export.arxiv.org instead.
//!
//! cargo run -p lore-examples --example arxiv_import
//! cargo run -p lore-examples --example arxiv_import -- --live 1706.03762

use std::sync::Arc;

use lore_core::ingest::{ArxivClient, FixtureArxivSource, ARXIV_ENDPOINT};
use lore_examples::memory_ingestor;
use lore_testkit::fixtures::{arxiv_feed, pdf_with_lines, NOTEBOOK_ENTRY};

#[tokio::main]
async fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (client, id) = match args.as_slice() {
        [flag, id] if flag == "--live" => (ArxivClient::http(ARXIV_ENDPOINT), id.clone()),
        _ => {
            let host = "https://arxiv.org";
            let pdf = pdf_with_lines(&[NOTEBOOK_ENTRY.title, "We index five years of shared lab notebooks."]);
            let source = FixtureArxivSource::new()
                .with_feed(NOTEBOOK_ENTRY.id, arxiv_feed(&NOTEBOOK_ENTRY, host))
                .with_pdf(&format!("{host}/pdf/{}v{}", NOTEBOOK_ENTRY.id, NOTEBOOK_ENTRY.version), pdf);
            (ArxivClient::new(Arc::new(source)), NOTEBOOK_ENTRY.id.to_owned())
        }
    };
    let ingestor = memory_ingestor().with_arxiv(client);
    let me = ingestor.model().ensure_principal("ada").unwrap().id;
    let papers = ingestor.model().create_collection("papers", me, None).unwrap().id;

    match ingestor.import_arxiv(&id, papers, me).await {
        Ok(done) => {
            let d = &done.document;
            println!("imported {:?} as document {} ({} chunks)", d.title, d.id, done.chunk_ids.len());
            for (k, v) in &d.source_meta {
                println!("  {k}: {v}");
            }
        }
        Err(e) => println!("import failed: {e}"),
    }
    match ingestor.import_arxiv(&format!("arXiv:{id}"), papers, me).await {
        Err(e) => println!("importing again: {e}"),
        Ok(_) => println!("imported twice?"),
    }
    println!("bad id: {}", ingestor.import_arxiv("not-an-id", papers, me).await.unwrap_err());
}
