//! Path-style S3 object API over an in-memory map. Requests must carry a
//! presigned `X-Amz-Signature` query parameter.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::any;
use axum::Router;

use crate::{serve, Served};

#[derive(Default)]
struct Inner {
    objects: Mutex<BTreeMap<(String, String), Vec<u8>>>,
    down: AtomicBool,
}

pub struct MockS3 {
    inner: Arc<Inner>,
    served: Served,
}

impl MockS3 {
    pub async fn start() -> Self {
        let inner = Arc::new(Inner::default());
        let router = Router::new()
            .route("/:bucket/*key", any(handle))
            .with_state(inner.clone());
        MockS3 {
            inner,
            served: serve(router).await,
        }
    }

    pub fn endpoint(&self) -> String {
        self.served.url()
    }

    /// While unavailable every request gets a 503.
    pub fn set_available(&self, up: bool) {
        self.inner.down.store(!up, Ordering::SeqCst);
    }

    pub fn object_count(&self) -> usize {
        self.inner.objects.lock().unwrap().len()
    }

    pub fn keys(&self, bucket: &str) -> Vec<String> {
        self.inner
            .objects
            .lock()
            .unwrap()
            .keys()
            .filter(|(b, _)| b == bucket)
            .map(|(_, k)| k.clone())
            .collect()
    }

    /// Overwrites a stored object in place, as bit rot or tampering would.
    pub fn corrupt(&self, bucket: &str, key: &str, bytes: Vec<u8>) {
        self.inner
            .objects
            .lock()
            .unwrap()
            .insert((bucket.to_owned(), key.to_owned()), bytes);
    }
}

async fn handle(
    State(inner): State<Arc<Inner>>,
    method: Method,
    Path((bucket, key)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
    body: Bytes,
) -> Response {
    if inner.down.load(Ordering::SeqCst) {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    if !query.contains_key("X-Amz-Signature") {
        return (StatusCode::FORBIDDEN, "<Error><Code>AccessDenied</Code></Error>").into_response();
    }
    let id = (bucket, key);
    let mut objects = inner.objects.lock().unwrap();
    match method {
        Method::PUT => {
            objects.insert(id, body.to_vec());
            StatusCode::OK.into_response()
        }
        Method::GET => match objects.get(&id) {
            Some(bytes) => bytes.clone().into_response(),
            None => (StatusCode::NOT_FOUND, "<Error><Code>NoSuchKey</Code></Error>").into_response(),
        },
        Method::HEAD => {
            if objects.contains_key(&id) {
                StatusCode::OK.into_response()
            } else {
                StatusCode::NOT_FOUND.into_response()
            }
        }
        Method::DELETE => {
            objects.remove(&id);
            StatusCode::NO_CONTENT.into_response()
        }
        _ => StatusCode::METHOD_NOT_ALLOWED.into_response(),
    }
}
