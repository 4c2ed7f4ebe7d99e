//! Fixed-stride chunking with overlap, in characters.
//!
//! cargo run -p lore-examples --example chunking

use lore_core::ingest::{chunk_text, CharOffsets, ChunkPolicy};

fn main() {
    let text = "Chunks overlap so that a sentence cut at a boundary still appears \
                whole in one of the two neighbours. Offsets count characters, not bytes: \
                naïve café text is safe.";
    let policy = ChunkPolicy::new(60, 15).expect("overlap must be smaller than size");
    let spans = chunk_text(text, policy).expect("chunking");
    let offsets = CharOffsets::new(text);
    println!("{} characters -> {} chunks (size {}, overlap {})", text.chars().count(), spans.len(), policy.size, policy.overlap);
    for s in &spans {
        println!("  [{:>3}, {:>3})  {:?}", s.start, s.end, offsets.slice(*s));
    }
    match ChunkPolicy::new(10, 10) {
        Err(e) => println!("rejected policy: {e}"),
        Ok(_) => unreachable!(),
    }
}
