//! JSON HTTP endpoints.

use std::collections::BTreeSet;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{DefaultBodyLimit, FromRequestParts, Multipart, Path, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{async_trait, Json, Router};
use lore_core::index::ChunkHit;
use lore_core::ingest::Source;
use lore_core::model::{Collection, Document, DocumentKind, PermissionGrant, PermissionLevel};
use lore_core::{CollectionId, DocumentId, PrincipalId};
use serde::{Deserialize, Serialize};

use crate::app::App;
use crate::auth::bearer;
use crate::error::{codes, ApiError};
use crate::ws;

pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

pub fn router(app: App) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/collections", post(create_collection).get(list_collections))
        .route("/collections/:id", get(get_collection))
        .route("/collections/:id/move", post(move_collection))
        .route("/collections/:id/grants", post(set_grant))
        .route("/documents", post(upload_document))
        .route("/documents/:id", get(get_document).delete(delete_document))
        .route("/documents/:id/blob", get(get_blob))
        .route("/import/arxiv", post(import_arxiv))
        .route("/search", post(search))
        .route("/ws/chat", get(ws::chat))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(app)
}

/// The authenticated principal of a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caller(pub PrincipalId);

#[async_trait]
impl FromRequestParts<App> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &App) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(bearer)
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, codes::UNAUTHORIZED, "missing bearer token"))?;
        Ok(Caller(app.tokens.authenticate(token)?))
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionView {
    #[serde(flatten)]
    pub collection: Collection,
    /// The caller's effective permission.
    pub permission: PermissionLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub id: DocumentId,
    pub title: String,
    pub kind: DocumentKind,
    pub ingested_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionDetail {
    #[serde(flatten)]
    pub view: CollectionView,
    pub children: Vec<CollectionId>,
    pub documents: Vec<DocumentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    #[serde(flatten)]
    pub document: Document,
    pub chunk_count: usize,
}

fn view(app: &App, collection: Collection, caller: PrincipalId) -> ApiResult<CollectionView> {
    let permission = app.model().effective_permission(caller, collection.id)?;
    Ok(CollectionView { collection, permission })
}

fn require(app: &App, caller: PrincipalId, id: CollectionId, level: PermissionLevel) -> ApiResult<()> {
    if app.model().effective_permission(caller, id)? < level {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            codes::PERMISSION_DENIED,
            format!("{level} required on collection {id}"),
        ));
    }
    Ok(())
}

fn path_id(p: Result<Path<i64>, PathRejection>) -> ApiResult<i64> {
    Ok(p?.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCollection {
    name: String,
    #[serde(default)]
    parent_id: Option<CollectionId>,
}

async fn create_collection(
    State(app): State<App>,
    Caller(caller): Caller,
    body: Result<Json<NewCollection>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CollectionView>)> {
    let Json(body) = body?;
    let c = app.model().create_collection(&body.name, caller, body.parent_id)?;
    Ok((StatusCode::CREATED, Json(view(&app, c, caller)?)))
}

#[derive(Debug, Serialize)]
struct CollectionList {
    collections: Vec<CollectionView>,
}

async fn list_collections(State(app): State<App>, Caller(caller): Caller) -> ApiResult<Json<CollectionList>> {
    let collections = app
        .model()
        .visible_collections(caller)?
        .into_iter()
        .map(|c| view(&app, c, caller))
        .collect::<ApiResult<_>>()?;
    Ok(Json(CollectionList { collections }))
}

async fn get_collection(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
) -> ApiResult<Json<CollectionDetail>> {
    let id = CollectionId(path_id(id)?);
    let c = app.model().collection(id)?;
    require(&app, caller, id, PermissionLevel::View)?;
    let children = app.model().children(id)?.into_iter().map(|c| c.id).collect();
    let documents = app
        .model()
        .documents_in(id)?
        .into_iter()
        .map(|d| DocumentSummary {
            id: d.id,
            title: d.title,
            kind: d.kind,
            ingested_at: d.ingested_at,
        })
        .collect();
    Ok(Json(CollectionDetail {
        view: view(&app, c, caller)?,
        children,
        documents,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveBody {
    /// `null` makes the collection a root.
    parent_id: Option<CollectionId>,
}

async fn move_collection(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
    body: Result<Json<MoveBody>, JsonRejection>,
) -> ApiResult<Json<CollectionView>> {
    let id = CollectionId(path_id(id)?);
    let Json(body) = body?;
    let c = app.model().move_collection(id, body.parent_id, caller)?;
    Ok(Json(view(&app, c, caller)?))
}

/// A principal by id or by display name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PrincipalRef {
    Id(PrincipalId),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrantBody {
    principal: PrincipalRef,
    /// `NONE` removes the grant.
    level: PermissionLevel,
}

async fn set_grant(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
    body: Result<Json<GrantBody>, JsonRejection>,
) -> ApiResult<Json<PermissionGrant>> {
    let id = CollectionId(path_id(id)?);
    let Json(body) = body?;
    let principal = match body.principal {
        PrincipalRef::Id(p) => app.model().principal(p)?.id,
        PrincipalRef::Name(n) => app.model().principal_by_name(&n)?.id,
    };
    if body.level == PermissionLevel::None {
        app.model().revoke_permission(id, principal, caller)?;
        return Ok(Json(PermissionGrant {
            collection: id,
            principal,
            level: PermissionLevel::None,
        }));
    }
    Ok(Json(app.model().grant_permission(id, principal, body.level, caller)?))
}

fn document_view(app: &App, document: Document) -> ApiResult<DocumentView> {
    let chunk_count = app.model().chunks_of(document.id)?.len();
    Ok(DocumentView { document, chunk_count })
}

async fn upload_document(
    State(app): State<App>,
    Caller(caller): Caller,
    mut form: Multipart,
) -> ApiResult<(StatusCode, Json<DocumentView>)> {
    let mut file: Option<(Vec<u8>, Option<String>)> = None;
    let mut kind = None;
    let mut title = None;
    let mut collection = None;
    while let Some(field) = form.next_field().await? {
        let name = field.name().unwrap_or_default().to_owned();
        match name.as_str() {
            "file" => {
                let media = field.content_type().map(str::to_owned);
                file = Some((field.bytes().await?.to_vec(), media));
            }
            "kind" => kind = Some(field.text().await?),
            "title" => title = Some(field.text().await?).filter(|t| !t.trim().is_empty()),
            "collection_id" => collection = Some(field.text().await?),
            other => return Err(ApiError::invalid(format!("unexpected form field {other:?}"))),
        }
    }
    let (bytes, media_type) = file.ok_or_else(|| ApiError::invalid("missing form field \"file\""))?;
    let kind: DocumentKind = kind.ok_or_else(|| ApiError::invalid("missing form field \"kind\""))?.parse()?;
    let collection: CollectionId = collection
        .ok_or_else(|| ApiError::invalid("missing form field \"collection_id\""))?
        .trim()
        .parse()
        .map_err(|_| ApiError::invalid("collection_id must be an integer"))?;
    let out = app
        .ingestor
        .ingest_document(
            Source::Upload {
                bytes,
                kind,
                media_type: media_type.filter(|m| m != "application/octet-stream"),
            },
            collection,
            title,
            caller,
        )
        .await?;
    Ok((StatusCode::CREATED, Json(document_view(&app, out.document)?)))
}

async fn get_document(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
) -> ApiResult<Json<DocumentView>> {
    let doc = app.model().document_for(DocumentId(path_id(id)?), caller)?;
    Ok(Json(document_view(&app, doc)?))
}

async fn get_blob(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
) -> ApiResult<Response> {
    let doc = app.model().document_for(DocumentId(path_id(id)?), caller)?;
    let blob = doc
        .blob
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, "document has no stored original"))?;
    let bytes = app.ingestor.blobs().get_blob(&blob).await?;
    Ok(([(header::CONTENT_TYPE, blob.media_type)], bytes).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Deleted {
    pub document_id: DocumentId,
    pub chunks_removed: u64,
}

async fn delete_document(
    State(app): State<App>,
    Caller(caller): Caller,
    id: Result<Path<i64>, PathRejection>,
) -> ApiResult<Json<Deleted>> {
    let gone = app.ingestor.delete_document(DocumentId(path_id(id)?), caller).await?;
    Ok(Json(Deleted {
        document_id: gone.document,
        chunks_removed: gone.chunks_removed,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportBody {
    id: String,
    collection_id: CollectionId,
}

async fn import_arxiv(
    State(app): State<App>,
    Caller(caller): Caller,
    body: Result<Json<ImportBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<DocumentView>)> {
    let Json(body) = body?;
    let out = app.ingestor.import_arxiv(&body.id, body.collection_id, caller).await?;
    Ok((StatusCode::CREATED, Json(document_view(&app, out.document)?)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchBody {
    query: String,
    collection_ids: BTreeSet<CollectionId>,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<ChunkHit>,
}

async fn search(
    State(app): State<App>,
    Caller(caller): Caller,
    body: Result<Json<SearchBody>, JsonRejection>,
) -> ApiResult<Json<SearchResponse>> {
    let Json(body) = body?;
    let weights = match body.k {
        Some(k) => app.weights().with_k(k),
        None => app.weights(),
    };
    let hits = app
        .index()
        .hybrid_search(&body.query, &body.collection_ids, caller, weights)
        .await?;
    Ok(Json(SearchResponse { hits }))
}
