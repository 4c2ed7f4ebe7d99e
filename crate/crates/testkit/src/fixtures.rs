//! Recorded and generated inputs.

use lopdf::content::{Content, Operation};
use lopdf::{dictionary, Document, Object, Stream};

/// What the arXiv API answers for an id it does not know.
pub const EMPTY_FEED: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<feed xmlns="http://www.w3.org/2005/Atom">
  <link href="http://arxiv.org/api/query?search_query%3D%26id_list%3D2404.99999%26start%3D0%26max_results%3D1" rel="self" type="application/atom+xml"/>
  <title type="html">ArXiv Query: search_query=&amp;id_list=2404.99999&amp;start=0&amp;max_results=1</title>
  <id>http://arxiv.org/api/OEvAl3MBqlAxW3tDqBV2ABtyBIE</id>
  <updated>2024-04-20T00:00:00-04:00</updated>
  <opensearch:totalResults xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">0</opensearch:totalResults>
  <opensearch:startIndex xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">0</opensearch:startIndex>
  <opensearch:itemsPerPage xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">1</opensearch:itemsPerPage>
</feed>
"#;

pub const ATTENTION_ID: &str = "1706.03762";
pub const ATTENTION_TITLE: &str = "Attention Is All You Need";
pub const ATTENTION_ABSTRACT: &str = "The dominant sequence transduction models are based on complex recurrent or convolutional neural networks in an encoder-decoder configuration. The best performing models also connect the encoder and decoder through an attention mechanism. We propose a new simple network architecture, the Transformer, based solely on attention mechanisms, dispensing with recurrence and convolutions entirely.";
pub const ATTENTION_AUTHORS: [&str; 8] = [
    "Ashish Vaswani",
    "Noam Shazeer",
    "Niki Parmar",
    "Jakob Uszkoreit",
    "Llion Jones",
    "Aidan N. Gomez",
    "Lukasz Kaiser",
    "Illia Polosukhin",
];

/// One entry of an Atom feed as the arXiv API lays it out.
#[derive(Debug, Clone, Copy)]
pub struct FeedEntry<'a> {
    /// Bare id without version, e.g. `1706.03762`.
    pub id: &'a str,
    pub version: u32,
    /// As it appears in the feed, line breaks included.
    pub title: &'a str,
    pub summary: &'a str,
    pub authors: &'a [&'a str],
    pub published: &'a str,
    pub category: &'a str,
}

/// Single-entry feed for `entry`; PDF links point under `host` (e.g.
/// `http://arxiv.org` or a mock server).
pub fn arxiv_feed(entry: &FeedEntry<'_>, host: &str) -> String {
    let authors: String = entry
        .authors
        .iter()
        .map(|a| format!("    <author>\n      <name>{a}</name>\n    </author>\n"))
        .collect();
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<feed xmlns="http://www.w3.org/2005/Atom">
  <link href="http://arxiv.org/api/query?search_query%3D%26id_list%3D{id}%26start%3D0%26max_results%3D1" rel="self" type="application/atom+xml"/>
  <title type="html">ArXiv Query: search_query=&amp;id_list={id}&amp;start=0&amp;max_results=1</title>
  <id>http://arxiv.org/api/4Asw0RBNWxXO6kqTkG0dZf4ZqXw</id>
  <updated>2024-04-20T00:00:00-04:00</updated>
  <opensearch:totalResults xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">1</opensearch:totalResults>
  <opensearch:startIndex xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">0</opensearch:startIndex>
  <opensearch:itemsPerPage xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">1</opensearch:itemsPerPage>
  <entry>
    <id>http://arxiv.org/abs/{id}v{v}</id>
    <updated>2023-08-02T00:41:18Z</updated>
    <published>{published}</published>
    <title>{title}</title>
    <summary>  {summary}
</summary>
{authors}    <arxiv:comment xmlns:arxiv="http://arxiv.org/schemas/atom">15 pages, 5 figures</arxiv:comment>
    <link href="{host}/abs/{id}v{v}" rel="alternate" type="text/html"/>
    <link title="pdf" href="{host}/pdf/{id}v{v}" rel="related" type="application/pdf"/>
    <arxiv:primary_category xmlns:arxiv="http://arxiv.org/schemas/atom" term="{cat}" scheme="http://arxiv.org/schemas/atom"/>
    <category term="{cat}" scheme="http://arxiv.org/schemas/atom"/>
  </entry>
</feed>
"#,
        id = entry.id,
        v = entry.version,
        published = entry.published,
        title = entry.title,
        summary = entry.summary,
        cat = entry.category,
    )
}

pub const ATTENTION_ENTRY: FeedEntry<'static> = FeedEntry {
    id: ATTENTION_ID,
    version: 7,
    title: "Attention Is All You\n  Need",
    summary: ATTENTION_ABSTRACT,
    authors: &ATTENTION_AUTHORS,
    published: "2017-06-12T17:57:34Z",
    category: "cs.CL",
};

pub fn attention_feed(host: &str) -> String {
    arxiv_feed(&ATTENTION_ENTRY, host)
}

/// A made-up new-style record used by the service tests.
pub const NOTEBOOK_ENTRY: FeedEntry<'static> = FeedEntry {
    id: "2404.12345",
    version: 1,
    title: "Lab Notebooks as a Retrieval Corpus",
    summary: "We index five years of shared lab notebooks and meeting notes and study how well hybrid lexical and vector retrieval answers questions about unpublished procedures.",
    authors: &["R. Example", "S. Placeholder"],
    published: "2024-04-18T12:00:00Z",
    category: "cs.IR",
};

/// A feed cut off mid-entry.
pub fn truncated_feed() -> String {
    let full = attention_feed("http://arxiv.org");
    let cut = full.find("<summary>").expect("fixture has a summary");
    full[..cut + 40].to_owned()
}

/// Single-font PDF with one text line per entry of `lines`.
pub fn pdf_with_lines(lines: &[&str]) -> Vec<u8> {
    let mut doc = Document::with_version("1.5");
    let pages_id = doc.new_object_id();
    let font_id = doc.add_object(dictionary! {
        "Type" => "Font",
        "Subtype" => "Type1",
        "BaseFont" => "Helvetica",
        "Encoding" => "WinAnsiEncoding",
    });
    let resources_id = doc.add_object(dictionary! {
        "Font" => dictionary! { "F1" => font_id },
    });
    let mut ops = vec![
        Operation::new("BT", vec![]),
        Operation::new("Tf", vec!["F1".into(), 12.into()]),
        Operation::new("TL", vec![16.into()]),
        Operation::new("Td", vec![72.into(), 760.into()]),
    ];
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            ops.push(Operation::new("T*", vec![]));
        }
        ops.push(Operation::new("Tj", vec![Object::string_literal(*line)]));
    }
    ops.push(Operation::new("ET", vec![]));
    let content = Content { operations: ops };
    let content_id = doc.add_object(Stream::new(dictionary! {}, content.encode().expect("content encodes")));
    let page_id = doc.add_object(dictionary! {
        "Type" => "Page",
        "Parent" => pages_id,
        "Contents" => content_id,
    });
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => vec![page_id.into()],
            "Count" => 1,
            "Resources" => resources_id,
            "MediaBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
        }),
    );
    let catalog_id = doc.add_object(dictionary! {
        "Type" => "Catalog",
        "Pages" => pages_id,
    });
    doc.trailer.set("Root", catalog_id);
    let mut out = Vec::new();
    doc.save_to(&mut out).expect("pdf serializes");
    out
}

/// Deterministic pseudo-English text of roughly `words` words.
pub fn lorem(seed: u64, words: usize) -> String {
    const VOCAB: [&str; 32] = [
        "graph", "neural", "retrieval", "quantum", "lattice", "protein", "galaxy", "entropy", "kernel",
        "tensor", "sparse", "gradient", "photon", "enzyme", "manifold", "spectral", "bayesian", "cluster",
        "turbulence", "catalyst", "boson", "topology", "genome", "plasma", "inference", "vector", "meeting",
        "seminar", "dataset", "theorem", "simulation", "telescope",
    ];
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut out = Vec::with_capacity(words);
    for _ in 0..words {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        out.push(VOCAB[(state >> 59) as usize]);
    }
    out.join(" ")
}

/// Ten short research-group documents (title, text) on distinct topics.
pub const CORPUS: [(&str, &str); 10] = [
    ("Transformer notes", "The Transformer replaces recurrence with self-attention. Each layer applies multi-head attention followed by a position-wise feed-forward network. Positional encodings inject token order because attention itself is permutation invariant."),
    ("Glacier field log", "Day three on the glacier: ablation stakes were read at dawn. Surface melt rates doubled compared with last season. The moraine survey used differential GPS with centimetre accuracy."),
    ("Lab safety briefing", "Always wear eye protection in the wet lab. Acids are stored below bases. Spills of hydrofluoric acid require calcium gluconate gel and an immediate call to the safety officer."),
    ("Graph neural networks reading group", "Message passing networks aggregate neighbour features at every layer. Oversmoothing appears when too many layers are stacked. Attention-based aggregation weights neighbours by learned relevance."),
    ("Telescope proposal draft", "We request twelve nights on the two metre telescope to monitor variable stars in the galactic bulge. Photometric cadence of ten minutes resolves pulsation periods shorter than an hour."),
    ("Protein folding seminar", "Folding proceeds through a funnel-shaped energy landscape. Chaperones prevent aggregation of partially folded intermediates. Structure prediction now rivals crystallography for many domains."),
    ("Group meeting minutes", "Action items: Ada will rerun the ablation study with the new tokenizer, Bob will order more GPU hours, and the reading group moves to Thursdays."),
    ("Optimizer comparison", "Adam with warmup converged faster than SGD with momentum on the translation task. Learning rate decay proportional to the inverse square root of the step count worked best."),
    ("Soil microbiome sampling", "Cores were taken at five depths along the transect. DNA extraction yields dropped sharply below forty centimetres. Samples are frozen at minus eighty degrees within two hours."),
    ("Compiler course syllabus", "Topics include lexical analysis, parsing with LR automata, type checking, intermediate representations, register allocation by graph colouring, and garbage collection."),
];
