//! The two relevance signals behind hybrid search.
//!
//! cargo run -p lore-examples --example similarity

use lore_core::index::{cosine_similarity, fused_score, trigram_set, trigram_similarity, Embedder, HashEmbedder};

fn main() {
    let h = std::f32::consts::FRAC_1_SQRT_2;
    println!("cosine((1,0), (1,0))       = {}", cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap());
    println!("cosine((1,0), (0,1))       = {}", cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap());
    println!("cosine((1,0), (.707,.707)) = {:.8}", cosine_similarity(&[1.0, 0.0], &[h, h]).unwrap());
    if let Err(e) = cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]) {
        println!("cosine with a zero vector: {e}");
    }

    println!("trigrams(\"Cat!\") = {:?}", trigram_set("Cat!"));
    for (a, b) in [("cat", "cats"), ("telescope", "telescopes"), ("", "")] {
        println!("trigram_similarity({a:?}, {b:?}) = {}", trigram_similarity(a, b));
    }

    let embedder = HashEmbedder::new(64);
    let q = embedder.embed_one("attention heads");
    let d = embedder.embed_one("multi-head attention");
    let cos = cosine_similarity(&q, &d).unwrap();
    let tri = trigram_similarity("attention heads", "multi-head attention");
    println!("{}: cosine {cos:.3}, trigram {tri:.3}", embedder.embedder_id());
    for alpha in [0.0, 0.7, 1.0] {
        println!("  fused at alpha {alpha}: {:.3}", fused_score(alpha, cos, tri));
    }
}
