use std::path::PathBuf;

use axum::async_trait;
use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use manuscriptor_core::engine::{HighlightResult, DEFAULT_HIGHLIGHT_K, RESULT_CAP};
use manuscriptor_core::library::{
    external_entry_id, resolve_doi, CitationMarker, EntryRef, LibraryEntry, LibraryError,
    RemoveReport,
};
use manuscriptor_core::{parse_filter, RankingSource, SearchResult};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{ApiError, ErrorCode};
use crate::state::{valid_user, AppState, Loaded, DEFAULT_USER};

/// Header selecting whose library a request operates on.
pub const USER_HEADER: &str = "user";

pub fn router(state: AppState, ui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/admin/reload", post(reload))
        .route("/search", post(search))
        .route("/papers/:id", get(get_paper))
        .route("/papers/:id/highlight", post(highlight))
        .route("/library", get(list_library).post(add_to_library))
        .route("/library/:entry/cite", post(cite))
        .route("/library/:entry", delete(remove_entry))
        .route("/markers/:marker_id", delete(remove_marker))
        .fallback(api_not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match ui {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn api_not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such endpoint")
}

async fn method_not_allowed() -> Response {
    let mut resp = ApiError::new(ErrorCode::BadRequest, "method not allowed").into_response();
    *resp.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    resp
}

/// The library owner named by the `user` header, or the default user.
pub struct User(pub String);

#[async_trait]
impl<S: Send + Sync> FromRequestParts<S> for User {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, ApiError> {
        match parts.headers.get(USER_HEADER) {
            None => Ok(User(DEFAULT_USER.to_string())),
            Some(v) => match v.to_str() {
                Ok(name) if valid_user(name) => Ok(User(name.to_string())),
                _ => Err(ApiError::new(
                    ErrorCode::BadRequest,
                    "user header must be 1-64 letters, digits, '-' or '_'",
                )),
            },
        }
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        log::error!("worker task failed: {e}");
        ApiError::new(ErrorCode::Internal, "internal error")
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub corpus_size: usize,
    pub dim: usize,
    pub snapshot_hash: String,
}

fn health_of(loaded: &Loaded) -> Health {
    Health {
        status: "ok".into(),
        corpus_size: loaded.engine.len(),
        dim: loaded.engine.snapshot().dim(),
        snapshot_hash: loaded.hash.clone(),
    }
}

async fn health(State(state): State<AppState>) -> Result<Json<Health>, ApiError> {
    let loaded = state.loaded()?;
    Ok(Json(health_of(&loaded)))
}

async fn reload(State(state): State<AppState>) -> Result<Json<Health>, ApiError> {
    let loaded = blocking(move || state.reload()).await?;
    log::info!("reloaded snapshot {}", loaded.hash);
    Ok(Json(health_of(&loaded)))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub filter: String,
    pub source: RankingSource,
    #[serde(default = "default_limit")]
    pub limit: usize,
    #[serde(default)]
    pub offset: usize,
}

fn default_limit() -> usize {
    RESULT_CAP
}

async fn search(
    State(state): State<AppState>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResult>, ApiError> {
    let Json(req) = body?;
    let loaded = state.loaded()?;
    let result = blocking(move || {
        let query = parse_filter(&req.filter).map_err(manuscriptor_core::EngineError::from)?;
        Ok(loaded
            .engine
            .search_query(&query, &req.source, req.offset, req.limit)?)
    })
    .await?;
    Ok(Json(result))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceView {
    pub ordinal: u32,
    pub text: String,
    pub char_span: (u32, u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaperView {
    pub id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub journal: String,
    pub year: i32,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub body: Vec<String>,
    pub doi: Option<String>,
    pub sentences: Vec<SentenceView>,
}

async fn get_paper(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> Result<Json<PaperView>, ApiError> {
    let Path(id) = id?;
    let loaded = state.loaded()?;
    let engine = &loaded.engine;
    let paper = engine.paper(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let sentences = engine
        .sentences(&id)
        .unwrap_or_default()
        .iter()
        .map(|s| SentenceView {
            ordinal: s.ordinal,
            text: s.text.clone(),
            char_span: s.char_span,
        })
        .collect();
    Ok(Json(PaperView {
        id: paper.id.clone(),
        title: paper.title.clone(),
        authors: paper.authors.clone(),
        journal: paper.journal.clone(),
        year: paper.year,
        abstract_text: paper.abstract_text.clone(),
        body: paper.body.clone(),
        doi: paper.doi.clone(),
        sentences,
    }))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HighlightRequest {
    pub source: RankingSource,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    DEFAULT_HIGHLIGHT_K
}

async fn highlight(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Json<HighlightRequest>, JsonRejection>,
) -> Result<Json<HighlightResult>, ApiError> {
    let Path(id) = id?;
    let Json(req) = body?;
    let loaded = state.loaded()?;
    if loaded.engine.paper(&id).is_none() {
        return Err(ApiError::not_found(&id));
    }
    let result = blocking(move || Ok(loaded.engine.highlight(&id, &req.source, req.k)?)).await?;
    Ok(Json(result))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListParams {
    #[serde(default)]
    pub cited_only: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryListing {
    pub entries: Vec<LibraryEntry>,
}

async fn list_library(
    State(state): State<AppState>,
    User(user): User,
    params: Result<Query<ListParams>, QueryRejection>,
) -> Result<Json<LibraryListing>, ApiError> {
    let Query(params) = params?;
    let entries = state.read_library(&user, |lib| lib.list_entries(params.cited_only))?;
    Ok(Json(LibraryListing { entries }))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AddRequest {
    #[serde(default)]
    pub paper_id: Option<String>,
    #[serde(default)]
    pub doi: Option<String>,
}

async fn add_to_library(
    State(state): State<AppState>,
    User(user): User,
    body: Result<Json<AddRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<LibraryEntry>), ApiError> {
    let Json(req) = body?;
    let loaded = state.loaded()?;
    let entry_ref = match (req.paper_id, req.doi) {
        (Some(id), None) => EntryRef::Paper(id),
        (None, Some(doi)) => {
            let resolver_state = state.clone();
            let meta = blocking(move || Ok(resolve_doi(&doi, resolver_state.resolver())?)).await?;
            // A DOI that belongs to a corpus paper is saved as that paper.
            match loaded.engine.paper_by_doi(&meta.doi) {
                Some(p) => EntryRef::Paper(p.id.clone()),
                None => EntryRef::External(meta),
            }
        }
        _ => {
            return Err(ApiError::new(
                ErrorCode::BadRequest,
                "exactly one of `paper_id` and `doi` is required",
            ))
        }
    };
    let id = match &entry_ref {
        EntryRef::Paper(id) => id.clone(),
        EntryRef::External(meta) => external_entry_id(&meta.doi),
    };
    let (entry, created) = state.write_library(&user, |lib| {
        let existed = lib.get(&id).is_some();
        let entry = lib.add_entry(entry_ref, &loaded.engine)?;
        Ok::<_, LibraryError>((entry, !existed))
    })?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(entry)))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CiteRequest {
    pub marker_id: String,
}

async fn cite(
    State(state): State<AppState>,
    User(user): User,
    entry: Result<Path<String>, PathRejection>,
    body: Result<Json<CiteRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CitationMarker>), ApiError> {
    let Path(entry) = entry?;
    let Json(req) = body?;
    if req.marker_id.trim().is_empty() {
        return Err(ApiError::new(
            ErrorCode::BadRequest,
            "`marker_id` must not be empty",
        ));
    }
    let loaded = state.loaded()?;
    let marker = state.write_library(&user, |lib| {
        lib.cite(&entry, &req.marker_id, &loaded.engine)
    })?;
    Ok((StatusCode::CREATED, Json(marker)))
}

async fn remove_entry(
    State(state): State<AppState>,
    User(user): User,
    entry: Result<Path<String>, PathRejection>,
) -> Result<Json<RemoveReport>, ApiError> {
    let Path(entry) = entry?;
    Ok(Json(
        state.write_library(&user, |lib| lib.remove_entry(&entry))?,
    ))
}

async fn remove_marker(
    State(state): State<AppState>,
    User(user): User,
    marker: Result<Path<String>, PathRejection>,
) -> Result<Json<CitationMarker>, ApiError> {
    let Path(marker) = marker?;
    Ok(Json(
        state.write_library(&user, |lib| lib.remove_marker(&marker))?,
    ))
}
