//! The `{code, message}` error envelope and the status each failure maps to.

use axum::extract::multipart::MultipartError;
use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lore_agent::AgentError;
use lore_core::index::IndexError;
use lore_core::ingest::{ArxivError, IngestError};
use lore_core::model::ModelError;
use lore_core::storage::StorageError;
use serde::{Deserialize, Serialize};

use crate::auth::AuthError;

pub mod codes {
    pub const INVALID_REQUEST: &str = "INVALID_REQUEST";
    pub const UNAUTHORIZED: &str = "UNAUTHORIZED";
    pub const PERMISSION_DENIED: &str = "PERMISSION_DENIED";
    pub const NOT_FOUND: &str = "NOT_FOUND";
    pub const DUPLICATE_CONTENT: &str = "DUPLICATE_CONTENT";
    pub const DUPLICATE_NAME: &str = "DUPLICATE_NAME";
    pub const CYCLE_DETECTED: &str = "CYCLE_DETECTED";
    pub const EMPTY_SCOPE: &str = "EMPTY_SCOPE";
    pub const UNSUPPORTED_KIND: &str = "UNSUPPORTED_KIND";
    pub const EXTRACTION_FAILED: &str = "EXTRACTION_FAILED";
    pub const INVALID_ARXIV_ID: &str = "INVALID_ARXIV_ID";
    pub const UPSTREAM_ERROR: &str = "UPSTREAM_ERROR";
    pub const INTERNAL: &str = "INTERNAL";
    /// Socket-only codes.
    pub const BAD_FRAME: &str = "BAD_FRAME";
    pub const CONCURRENT_TURN: &str = "CONCURRENT_TURN";
}

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, codes::INVALID_REQUEST, message)
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.to_owned(),
            message: self.message.clone(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::warn!(code = self.code, "{}", self.message);
        }
        (self.status, Json(self.body())).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            ModelError::Invalid(_) => (StatusCode::BAD_REQUEST, codes::INVALID_REQUEST),
            ModelError::PermissionDenied => (StatusCode::FORBIDDEN, codes::PERMISSION_DENIED),
            ModelError::CollectionNotFound(_)
            | ModelError::ParentNotFound(_)
            | ModelError::PrincipalNotFound(_)
            | ModelError::DocumentNotFound(_) => (StatusCode::NOT_FOUND, codes::NOT_FOUND),
            ModelError::DuplicateContentInCollection => (StatusCode::CONFLICT, codes::DUPLICATE_CONTENT),
            ModelError::DuplicateSiblingName(_) => (StatusCode::CONFLICT, codes::DUPLICATE_NAME),
            ModelError::CycleDetected(_) => (StatusCode::CONFLICT, codes::CYCLE_DETECTED),
            ModelError::Db(_) => (StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL),
        };
        ApiError::new(status, code, message)
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        let message = e.to_string();
        match e {
            IndexError::Model(m) => m.into(),
            IndexError::EmptyScope => ApiError::new(StatusCode::BAD_REQUEST, codes::EMPTY_SCOPE, message),
            IndexError::PermissionDenied(_) => ApiError::new(StatusCode::FORBIDDEN, codes::PERMISSION_DENIED, message),
            IndexError::CollectionNotFound(_) => ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, message),
            IndexError::InvalidWeights(_) | IndexError::DimensionMismatch { .. } | IndexError::ZeroVector => {
                ApiError::invalid(message)
            }
            IndexError::EmbeddingFailed(_) => ApiError::new(StatusCode::BAD_GATEWAY, codes::UPSTREAM_ERROR, message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message),
        }
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        let message = e.to_string();
        match e {
            StorageError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, message),
            StorageError::BackendUnavailable(_) | StorageError::IntegrityError { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, codes::UPSTREAM_ERROR, message)
            }
            StorageError::Db(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let message = e.to_string();
        match e {
            IngestError::Model(m) => m.into(),
            IngestError::Index(i) => i.into(),
            IngestError::Storage(s) => s.into(),
            IngestError::InvalidPolicy { .. } => ApiError::invalid(message),
            IngestError::UnsupportedKind(_) => ApiError::new(StatusCode::BAD_REQUEST, codes::UNSUPPORTED_KIND, message),
            IngestError::ExtractionFailed(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, codes::EXTRACTION_FAILED, message)
            }
            IngestError::InvalidArxivId(_) => ApiError::new(StatusCode::BAD_REQUEST, codes::INVALID_ARXIV_ID, message),
            IngestError::Arxiv(ArxivError::NotFound(_)) => ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, message),
            IngestError::Arxiv(ArxivError::InvalidId(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, codes::INVALID_ARXIV_ID, message)
            }
            IngestError::Arxiv(_) | IngestError::Embedding(_) => {
                ApiError::new(StatusCode::BAD_GATEWAY, codes::UPSTREAM_ERROR, message)
            }
            IngestError::Aborted { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message),
        }
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        let message = e.to_string();
        match e {
            AgentError::PermissionDenied(_) => ApiError::new(StatusCode::FORBIDDEN, codes::PERMISSION_DENIED, message),
            AgentError::CollectionNotFound(_) => ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, message),
            AgentError::ConcurrentTurn => ApiError::new(StatusCode::CONFLICT, codes::CONCURRENT_TURN, message),
            AgentError::Model(m) => m.into(),
            AgentError::Index(i) => i.into(),
            AgentError::InvalidToolRounds | AgentError::Tools(_) => ApiError::invalid(message),
        }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        match e {
            AuthError::Unauthorized => ApiError::new(StatusCode::UNAUTHORIZED, codes::UNAUTHORIZED, e.to_string()),
            AuthError::Db(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::invalid(e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        ApiError::invalid(e.body_text())
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        ApiError::invalid(e.body_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lore_core::{CollectionId, DocumentId};

    #[test]
    fn model_errors_map_to_statuses() {
        let cases = [
            (ModelError::Invalid("x".into()), 400, codes::INVALID_REQUEST),
            (ModelError::PermissionDenied, 403, codes::PERMISSION_DENIED),
            (ModelError::CollectionNotFound(CollectionId(1)), 404, codes::NOT_FOUND),
            (ModelError::DocumentNotFound(DocumentId(1)), 404, codes::NOT_FOUND),
            (ModelError::DuplicateContentInCollection, 409, codes::DUPLICATE_CONTENT),
            (ModelError::CycleDetected(CollectionId(1)), 409, codes::CYCLE_DETECTED),
            (ModelError::DuplicateSiblingName("a".into()), 409, codes::DUPLICATE_NAME),
        ];
        for (e, status, code) in cases {
            let api: ApiError = e.into();
            assert_eq!(api.status.as_u16(), status);
            assert_eq!(api.code, code);
        }
    }

    #[test]
    fn nested_errors_unwrap() {
        let e: ApiError = IngestError::Model(ModelError::DuplicateContentInCollection).into();
        assert_eq!((e.status.as_u16(), e.code), (409, codes::DUPLICATE_CONTENT));
        let e: ApiError = IngestError::Arxiv(ArxivError::Network("down".into())).into();
        assert_eq!((e.status.as_u16(), e.code), (502, codes::UPSTREAM_ERROR));
        let e: ApiError = IndexError::Model(ModelError::PermissionDenied).into();
        assert_eq!(e.status.as_u16(), 403);
        let e: ApiError = AuthError::Unauthorized.into();
        assert_eq!(e.status.as_u16(), 401);
    }
}
