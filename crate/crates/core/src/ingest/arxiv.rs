//! arXiv import over the public Atom API (`export.arxiv.org/api/query`).
//!
//! Network access sits behind [`ArxivSource`] so tests and offline
//! deployments can serve recorded feeds.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use async_trait::async_trait;
use quick_xml::events::Event;
use quick_xml::Reader;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ENDPOINT: &str = "https://export.arxiv.org/api/query";

#[derive(Debug, Error)]
pub enum ArxivError {
    #[error("invalid arXiv identifier {0:?}")]
    InvalidId(String),
    #[error("arXiv has no entry for {0}")]
    NotFound(String),
    #[error("arXiv request failed: {0}")]
    Network(String),
    #[error("malformed arXiv response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArxivRecord {
    pub arxiv_id: String,
    pub title: String,
    pub authors: Vec<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub pdf_url: String,
    pub published: Option<String>,
}

fn new_style() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d{4}\.\d{4,5}(v\d+)?$").expect("compiles"))
}

fn old_style() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[a-z][a-z-]*(\.[a-z]{2})?/\d{7}(v\d+)?$").expect("compiles"))
}

/// Accepts `YYMM.NNNN[N][vV]` and `archive[.SC]/YYMMNNN[vV]`, optionally
/// prefixed with `arXiv:`, and returns the lowercase canonical form.
pub fn parse_arxiv_id(raw: &str) -> Result<String, ArxivError> {
    let trimmed = raw.trim();
    let body = match trimmed.get(..6) {
        Some(p) if p.eq_ignore_ascii_case("arxiv:") => trimmed[6..].trim_start(),
        _ => trimmed,
    };
    let id = body.to_ascii_lowercase();
    if new_style().is_match(&id) || old_style().is_match(&id) {
        Ok(id)
    } else {
        Err(ArxivError::InvalidId(raw.to_owned()))
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Default)]
struct EntryDraft {
    id: String,
    title: String,
    summary: String,
    published: String,
    authors: Vec<String>,
    pdf_url: Option<String>,
}

/// Parses an Atom feed; `Ok(None)` when it holds no usable entry.
pub fn parse_feed(xml: &str) -> Result<Option<EntryDraftRecord>, ArxivError> {
    let malformed = |e: &dyn std::fmt::Display| ArxivError::MalformedResponse(e.to_string());
    let mut reader = Reader::from_str(xml);
    let mut path: Vec<String> = Vec::new();
    let mut entries: Vec<EntryDraft> = Vec::new();
    let mut saw_feed = false;
    loop {
        match reader.read_event().map_err(|e| malformed(&e))? {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if path.is_empty() {
                    if name != "feed" {
                        return Err(malformed(&format!("root element <{name}> is not an Atom feed")));
                    }
                    saw_feed = true;
                }
                if name == "entry" && path.len() == 1 {
                    entries.push(EntryDraft::default());
                }
                if name == "link" && path.len() == 2 {
                    link_into(&e, entries.last_mut());
                }
                if name == "author" && path.len() == 2 {
                    if let Some(entry) = entries.last_mut() {
                        entry.authors.push(String::new());
                    }
                }
                path.push(name);
            }
            Event::Empty(e) => {
                if e.local_name().as_ref() == b"link" && path.len() == 2 {
                    link_into(&e, entries.last_mut());
                }
            }
            Event::End(_) => {
                path.pop();
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| malformed(&e))?;
                append_text(&path, &mut entries, &text);
            }
            Event::CData(t) => {
                let text = String::from_utf8_lossy(&t.into_inner()).into_owned();
                append_text(&path, &mut entries, &text);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_feed {
        return Err(malformed(&"empty document"));
    }
    if !path.is_empty() {
        return Err(malformed(&format!("document truncated inside <{}>", path.join("/"))));
    }
    // the API reports errors as a pseudo-entry whose id points at /api/errors
    let Some(entry) = entries
        .into_iter()
        .find(|e| !e.id.contains("/api/errors") && !e.id.trim().is_empty())
    else {
        return Ok(None);
    };
    let title = collapse_ws(&entry.title);
    if title.is_empty() {
        return Err(malformed(&"entry without a title"));
    }
    Ok(Some(EntryDraftRecord {
        entry_id: entry.id.trim().to_owned(),
        title,
        authors: entry.authors.iter().map(|a| collapse_ws(a)).filter(|a| !a.is_empty()).collect(),
        abstract_text: collapse_ws(&entry.summary),
        pdf_url: entry.pdf_url,
        published: Some(entry.published.trim().to_owned()).filter(|p| !p.is_empty()),
    }))
}

/// A parsed feed entry before it is tied to a requested id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryDraftRecord {
    pub entry_id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub abstract_text: String,
    pub pdf_url: Option<String>,
    pub published: Option<String>,
}

fn link_into(e: &quick_xml::events::BytesStart<'_>, entry: Option<&mut EntryDraft>) {
    let Some(entry) = entry else { return };
    let mut href = None;
    let mut is_pdf = false;
    for attr in e.attributes().flatten() {
        let value = String::from_utf8_lossy(&attr.value).into_owned();
        match attr.key.local_name().as_ref() {
            b"href" => href = Some(value),
            b"title" if value == "pdf" => is_pdf = true,
            b"type" if value == "application/pdf" => is_pdf = true,
            _ => {}
        }
    }
    if is_pdf && entry.pdf_url.is_none() {
        entry.pdf_url = href;
    }
}

fn append_text(path: &[String], entries: &mut [EntryDraft], text: &str) {
    let Some(entry) = entries.last_mut() else { return };
    let segs: Vec<&str> = path.iter().map(String::as_str).collect();
    match segs.as_slice() {
        ["feed", "entry", "id"] => entry.id.push_str(text),
        ["feed", "entry", "title"] => entry.title.push_str(text),
        ["feed", "entry", "summary"] => entry.summary.push_str(text),
        ["feed", "entry", "published"] => entry.published.push_str(text),
        ["feed", "entry", "author", "name"] => {
            if let Some(last) = entry.authors.last_mut() {
                last.push_str(text);
            }
        }
        _ => {}
    }
}

/// Where feeds and PDFs come from.
#[async_trait]
pub trait ArxivSource: Send + Sync {
    /// Raw Atom XML for an `id_list` query of one id.
    async fn query(&self, arxiv_id: &str) -> Result<String, ArxivError>;
    async fn fetch_pdf(&self, url: &str) -> Result<Vec<u8>, ArxivError>;
}

/// The live API over HTTPS.
#[derive(Debug, Clone)]
pub struct HttpArxivSource {
    endpoint: String,
    http: reqwest::Client,
}

impl HttpArxivSource {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpArxivSource {
            endpoint: endpoint.into(),
            http: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .user_agent(concat!("lore/", env!("CARGO_PKG_VERSION")))
                .build()
                .expect("reqwest client builds"),
        }
    }

    async fn get(&self, req: reqwest::RequestBuilder) -> Result<reqwest::Response, ArxivError> {
        let resp = req.send().await.map_err(|e| ArxivError::Network(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ArxivError::Network(format!("HTTP {}", resp.status())));
        }
        Ok(resp)
    }
}

impl Default for HttpArxivSource {
    fn default() -> Self {
        Self::new(DEFAULT_ENDPOINT)
    }
}

#[async_trait]
impl ArxivSource for HttpArxivSource {
    async fn query(&self, arxiv_id: &str) -> Result<String, ArxivError> {
        let req = self
            .http
            .get(&self.endpoint)
            .query(&[("id_list", arxiv_id), ("max_results", "1")]);
        self.get(req)
            .await?
            .text()
            .await
            .map_err(|e| ArxivError::Network(e.to_string()))
    }

    async fn fetch_pdf(&self, url: &str) -> Result<Vec<u8>, ArxivError> {
        let resp = self.get(self.http.get(url)).await?;
        Ok(resp
            .bytes()
            .await
            .map_err(|e| ArxivError::Network(e.to_string()))?
            .to_vec())
    }
}

/// Recorded feeds and PDFs keyed by id and URL.
#[derive(Debug, Clone, Default)]
pub struct FixtureArxivSource {
    feeds: HashMap<String, String>,
    pdfs: HashMap<String, Vec<u8>>,
}

impl FixtureArxivSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_feed(mut self, arxiv_id: &str, xml: impl Into<String>) -> Self {
        self.feeds.insert(arxiv_id.to_owned(), xml.into());
        self
    }

    pub fn with_pdf(mut self, url: &str, pdf: Vec<u8>) -> Self {
        self.pdfs.insert(url.to_owned(), pdf);
        self
    }
}

/// Atom feed with no entries, as the API returns for unknown ids.
pub const EMPTY_FEED: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<feed xmlns="http://www.w3.org/2005/Atom"><title>arXiv Query</title><id>http://arxiv.org/api/empty</id></feed>"#;

#[async_trait]
impl ArxivSource for FixtureArxivSource {
    async fn query(&self, arxiv_id: &str) -> Result<String, ArxivError> {
        Ok(self.feeds.get(arxiv_id).cloned().unwrap_or_else(|| EMPTY_FEED.to_owned()))
    }

    async fn fetch_pdf(&self, url: &str) -> Result<Vec<u8>, ArxivError> {
        self.pdfs
            .get(url)
            .cloned()
            .ok_or_else(|| ArxivError::Network(format!("no recorded PDF for {url}")))
    }
}

#[derive(Clone)]
pub struct ArxivClient {
    source: Arc<dyn ArxivSource>,
}

impl std::fmt::Debug for ArxivClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArxivClient").finish_non_exhaustive()
    }
}

impl ArxivClient {
    pub fn new(source: Arc<dyn ArxivSource>) -> Self {
        ArxivClient { source }
    }

    pub fn http(endpoint: &str) -> Self {
        Self::new(Arc::new(HttpArxivSource::new(endpoint)))
    }

    /// Metadata for one paper.
    pub async fn fetch(&self, raw_id: &str) -> Result<ArxivRecord, ArxivError> {
        let id = parse_arxiv_id(raw_id)?;
        let xml = self.source.query(&id).await?;
        let entry = parse_feed(&xml)?.ok_or_else(|| ArxivError::NotFound(id.clone()))?;
        let pdf_url = entry
            .pdf_url
            .unwrap_or_else(|| format!("https://arxiv.org/pdf/{id}"));
        Ok(ArxivRecord {
            arxiv_id: id,
            title: entry.title,
            authors: entry.authors,
            abstract_text: entry.abstract_text,
            pdf_url,
            published: entry.published,
        })
    }

    pub async fn fetch_pdf(&self, record: &ArxivRecord) -> Result<Vec<u8>, ArxivError> {
        self.source.fetch_pdf(&record.pdf_url).await
    }
}
