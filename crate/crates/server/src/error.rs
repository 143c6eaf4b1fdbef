use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use manuscriptor_core::corpus::SnapshotError;
use manuscriptor_core::library::LibraryError;
use manuscriptor_core::EngineError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    BadFilter,
    InvalidSource,
    UnknownPaper,
    NotFound,
    Conflict,
    Corrupt,
    Internal,
    /// Request body, query string or path that does not fit the API schema.
    BadRequest,
    /// No snapshot loaded yet, or the DOI resolver is unreachable.
    Unavailable,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            Self::BadFilter | Self::InvalidSource | Self::BadRequest => StatusCode::BAD_REQUEST,
            Self::UnknownPaper | Self::NotFound => StatusCode::NOT_FOUND,
            Self::Conflict => StatusCode::CONFLICT,
            Self::Corrupt | Self::Internal => StatusCode::INTERNAL_SERVER_ERROR,
            Self::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("`{what}` not found"))
    }

    pub fn unavailable() -> Self {
        Self::new(ErrorCode::Unavailable, "no snapshot loaded yet")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match &e {
            EngineError::Syntax(s) => Self::new(ErrorCode::BadFilter, e.to_string())
                .with_detail(json!({ "group": s.group, "reason": s.reason })),
            EngineError::InvalidSource(_) => Self::new(ErrorCode::InvalidSource, e.to_string()),
            EngineError::UnknownPaper(id) => {
                Self::new(ErrorCode::UnknownPaper, e.to_string()).with_detail(json!({ "id": id }))
            }
            EngineError::InvalidLimit(_) => Self::new(ErrorCode::BadRequest, e.to_string()),
        }
    }
}

impl From<LibraryError> for ApiError {
    fn from(e: LibraryError) -> Self {
        let code = match &e {
            LibraryError::UnknownPaper(_) => ErrorCode::UnknownPaper,
            LibraryError::DuplicateMarker(_) => ErrorCode::Conflict,
            LibraryError::NotFound(_) | LibraryError::DoiNotFound(_) => ErrorCode::NotFound,
            LibraryError::MalformedDoi(_) => ErrorCode::BadRequest,
            LibraryError::ResolverUnavailable(_) => ErrorCode::Unavailable,
            LibraryError::Storage(reason) => {
                log::error!("library storage: {reason}");
                return Self::new(ErrorCode::Internal, "library storage failed");
            }
        };
        Self::new(code, e.to_string())
    }
}

impl From<SnapshotError> for ApiError {
    fn from(e: SnapshotError) -> Self {
        // The variants only name files inside the snapshot, never full paths.
        match e {
            SnapshotError::Corrupt { .. } | SnapshotError::Build(_) => {
                Self::new(ErrorCode::Corrupt, e.to_string())
            }
            SnapshotError::Io { file, source } => {
                log::error!("snapshot io on {file}: {source}");
                Self::new(
                    ErrorCode::Corrupt,
                    format!("cannot read snapshot file `{file}`"),
                )
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(ErrorCode::BadRequest, e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        Self::new(ErrorCode::BadRequest, e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::new(ErrorCode::BadRequest, e.body_text())
    }
}
