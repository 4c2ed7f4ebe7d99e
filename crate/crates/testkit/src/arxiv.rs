//! The arXiv `api/query` endpoint plus PDF downloads, served from recordings.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use crate::fixtures::EMPTY_FEED;
use crate::{serve, Served};

#[derive(Default)]
struct Inner {
    feeds: Mutex<HashMap<String, String>>,
    pdfs: HashMap<String, Vec<u8>>,
    queries: Mutex<Vec<String>>,
}

pub struct MockArxiv {
    inner: Arc<Inner>,
    served: Served,
}

#[derive(Default)]
pub struct MockArxivBuilder {
    inner: Inner,
}

impl MockArxivBuilder {
    /// Feed returned for `id_list=<id>`.
    pub fn feed(mut self, id: &str, xml: impl Into<String>) -> Self {
        self.inner.feeds.get_mut().unwrap().insert(id.to_owned(), xml.into());
        self
    }

    /// Bytes served at `/pdf/<id>`.
    pub fn pdf(mut self, id: &str, bytes: Vec<u8>) -> Self {
        self.inner.pdfs.insert(id.to_owned(), bytes);
        self
    }

    pub async fn start(self) -> MockArxiv {
        let inner = Arc::new(self.inner);
        let router = Router::new()
            .route("/api/query", get(query))
            .route("/pdf/*id", get(pdf))
            .with_state(inner.clone());
        MockArxiv {
            inner,
            served: serve(router).await,
        }
    }
}

impl MockArxiv {
    pub fn builder() -> MockArxivBuilder {
        MockArxivBuilder::default()
    }

    pub fn base_url(&self) -> String {
        self.served.url()
    }

    /// Value to configure as the arXiv query endpoint.
    pub fn endpoint(&self) -> String {
        format!("{}/api/query", self.served.url())
    }

    /// Adds or replaces a feed, e.g. one whose links point at this server.
    pub fn set_feed(&self, id: &str, xml: impl Into<String>) {
        self.inner.feeds.lock().unwrap().insert(id.to_owned(), xml.into());
    }

    /// `id_list` values seen so far.
    pub fn queries(&self) -> Vec<String> {
        self.inner.queries.lock().unwrap().clone()
    }
}

async fn query(State(inner): State<Arc<Inner>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let id = q.get("id_list").cloned().unwrap_or_default();
    inner.queries.lock().unwrap().push(id.clone());
    let body = inner.feeds.lock().unwrap().get(&id).cloned().unwrap_or_else(|| EMPTY_FEED.to_owned());
    ([(header::CONTENT_TYPE, "application/atom+xml; charset=utf-8")], body).into_response()
}

async fn pdf(State(inner): State<Arc<Inner>>, Path(id): Path<String>) -> Response {
    match inner.pdfs.get(&id) {
        Some(bytes) => ([(header::CONTENT_TYPE, "application/pdf")], bytes.clone()).into_response(),
        None => StatusCode::NOT_FOUND.into_response(),
    }
}
