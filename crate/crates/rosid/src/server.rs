use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, Query as UrlQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rosid_core::feature_store::Catalogs;
use rosid_core::preference::{Choice, QueryResponse};
use rosid_core::query::{DesignCorpus, Query, QueryError};
use rosid_core::rng::derive_seed;
use rosid_core::session::{DesignRecord, DesignStore, InitMode, Session, SessionError, ThreadStatus};
use rosid_core::{Modality, PreferenceError, SignalType, StimulusId};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Shared service state: read-only catalogs, in-memory sessions and the
/// write-through design store.
pub struct AppState {
    catalogs: Catalogs<f64>,
    corpus: Arc<DesignCorpus>,
    asset_root: PathBuf,
    base_seed: Option<u64>,
    created: AtomicU64,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    store: Mutex<DesignStore>,
}

impl AppState {
    /// `base_seed` makes sessions created without an explicit seed
    /// reproducible; `asset_root` is where asset references resolve.
    pub fn new(
        catalogs: Catalogs<f64>,
        corpus: DesignCorpus,
        store: DesignStore,
        asset_root: PathBuf,
        base_seed: Option<u64>,
    ) -> Self {
        AppState {
            catalogs,
            corpus: Arc::new(corpus),
            asset_root,
            base_seed,
            created: AtomicU64::new(0),
            sessions: RwLock::new(HashMap::new()),
            store: Mutex::new(store),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/designs", get(session_designs))
        .route("/sessions/{id}/signals/{signal}/{modality}/query", get(current_query))
        .route("/sessions/{id}/signals/{signal}/{modality}/response", post(submit_response))
        .route("/sessions/{id}/signals/{signal}/{modality}/search", get(search))
        .route("/sessions/{id}/signals/{signal}/{modality}/finalize", post(finalize))
        .route("/catalog/{modality}/{id}/asset", get(asset))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::AlreadyFinalized { .. } => (StatusCode::CONFLICT, "already_finalized"),
            SessionError::StaleQuery => (StatusCode::CONFLICT, "stale_query"),
            SessionError::UnknownStimulus(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_stimulus"),
            SessionError::Query(QueryError::CatalogTooSmall { .. }) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "catalog_too_small")
            }
            SessionError::Query(_) => (StatusCode::UNPROCESSABLE_ENTITY, "query_error"),
            SessionError::Preference(PreferenceError::ChoiceOutOfRange { .. }) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "choice_out_of_range")
            }
            SessionError::Preference(_) => (StatusCode::UNPROCESSABLE_ENTITY, "preference_error"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: FromStr>(s: &str) -> ApiResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InitModeName {
    #[default]
    Random,
    Clustered,
}

#[derive(Debug, Default, Deserialize)]
struct CreateSession {
    seed: Option<u64>,
    #[serde(default)]
    init_mode: InitModeName,
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: String,
    signal_order: [SignalType; 4],
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Option<Json<CreateSession>>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let n = state.created.fetch_add(1, Ordering::Relaxed);
    let seed = match (req.seed, state.base_seed) {
        (Some(seed), _) => seed,
        (None, Some(base)) => derive_seed(base, &[n]),
        (None, None) => rand::random(),
    };
    let init_mode = match req.init_mode {
        InitModeName::Random => InitMode::Random,
        InitModeName::Clustered => InitMode::Clustered(Arc::clone(&state.corpus)),
    };
    let mut session = Session::create(seed, init_mode);
    let mut sessions = state.sessions.write().unwrap();
    let taken =
        |id: &str| sessions.contains_key(id) || state.store.lock().unwrap().records_for_session(id).next().is_some();
    // a reused seed keeps its signal order but needs a fresh id
    let mut k = 0;
    while taken(session.id()) {
        k += 1;
        let mut bytes = [0u8; 16];
        bytes[..8].copy_from_slice(&derive_seed(seed, &[n, k]).to_le_bytes());
        bytes[8..].copy_from_slice(&derive_seed(seed, &[k, n]).to_le_bytes());
        session.set_id(uuid::Builder::from_random_bytes(bytes).into_uuid().to_string());
    }
    let created = Created { session_id: session.id().to_owned(), signal_order: session.signal_order() };
    tracing::info!(session = %created.session_id, seed, "session created");
    sessions.insert(created.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn session_summary(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let summary = session.lock().unwrap().summary();
    Ok(Json(summary).into_response())
}

async fn session_designs(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Vec<DesignRecord>>> {
    let records: Vec<DesignRecord> = state.store.lock().unwrap().records_for_session(&id).cloned().collect();
    if records.is_empty() && !state.sessions.read().unwrap().contains_key(&id) {
        return Err(ApiError::unknown_session(&id));
    }
    Ok(Json(records))
}

type ThreadPath = UrlPath<(String, String, String)>;

fn thread_key(
    state: &AppState,
    (id, signal, modality): (String, String, String),
) -> ApiResult<(Arc<Mutex<Session>>, SignalType, Modality)> {
    let signal = parse(&signal)?;
    let modality = parse(&modality)?;
    Ok((state.session(&id)?, signal, modality))
}

/// The thread's unanswered query if there is one, otherwise a new query.
async fn current_query(State(state): State<Arc<AppState>>, UrlPath(path): ThreadPath) -> ApiResult<Json<Query>> {
    let (session, signal, modality) = thread_key(&state, path)?;
    let mut session = session.lock().unwrap();
    let thread = session.thread(signal, modality);
    if let (Some(pending), ThreadStatus::InProgress) = (thread.pending_query(), thread.status()) {
        return Ok(Json(pending.clone()));
    }
    Ok(Json(session.next_query(&state.catalogs, signal, modality)?))
}

#[derive(Debug, Deserialize)]
struct ResponseBody {
    choice: Choice,
    /// The query being answered; defaults to the current one.
    query: Option<Query>,
}

async fn submit_response(
    State(state): State<Arc<AppState>>,
    UrlPath(path): ThreadPath,
    Json(body): Json<ResponseBody>,
) -> ApiResult<Json<serde_json::Value>> {
    let (session, signal, modality) = thread_key(&state, path)?;
    let mut session = session.lock().unwrap();
    match body.query {
        Some(query) => {
            session.submit_response(&state.catalogs, signal, modality, &QueryResponse { query, choice: body.choice })?
        }
        None => session.respond(&state.catalogs, signal, modality, body.choice)?,
    }
    Ok(Json(json!({ "ok": true })))
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
}

async fn search(
    State(state): State<Arc<AppState>>,
    UrlPath(path): ThreadPath,
    UrlQuery(params): UrlQuery<SearchParams>,
) -> ApiResult<Response> {
    let (session, signal, modality) = thread_key(&state, path)?;
    let hits = session.lock().unwrap().search(&state.catalogs, signal, modality, &params.q);
    Ok(Json(hits).into_response())
}

#[derive(Debug, Deserialize)]
struct FinalizeBody {
    id: StimulusId,
}

async fn finalize(
    State(state): State<Arc<AppState>>,
    UrlPath(path): ThreadPath,
    Json(body): Json<FinalizeBody>,
) -> ApiResult<Json<serde_json::Value>> {
    let (session, signal, modality) = thread_key(&state, path)?;
    let mut session = session.lock().unwrap();
    let record = session.finalize_component(&state.catalogs, signal, modality, body.id)?;
    let design_complete = record.is_some();
    if let Some(record) = record {
        state.store.lock().unwrap().append(record).map_err(|e| {
            tracing::error!(error = %e, "cannot persist design");
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", e.to_string())
        })?;
    }
    let status = session.thread(signal, modality).status();
    Ok(Json(json!({ "status": status, "design_complete": design_complete })))
}

async fn asset(
    State(state): State<Arc<AppState>>,
    UrlPath((modality, id)): UrlPath<(String, String)>,
) -> ApiResult<Response> {
    let modality: Modality = parse(&modality)?;
    let id: StimulusId = parse(&id)?;
    let record = state.catalogs.get(modality).record(id).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_stimulus", format!("no {modality} stimulus {id}"))
    })?;
    let path = resolve_asset(&state.asset_root, &record.asset_ref)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "asset_missing", "asset path escapes the asset root"))?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| {
        ApiError::new(StatusCode::NOT_FOUND, "asset_missing", format!("no file for {}", record.asset_ref))
    })?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

fn resolve_asset(root: &Path, asset_ref: &str) -> Option<PathBuf> {
    let rel = Path::new(asset_ref);
    rel.components().all(|c| matches!(c, Component::Normal(_))).then(|| root.join(rel))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mp4") => "video/mp4",
        Some("webm") => "video/webm",
        Some("gif") => "image/gif",
        Some("png") => "image/png",
        Some("wav") => "audio/wav",
        Some("mp3") => "audio/mpeg",
        Some("json") => "application/json",
        Some("csv") => "text/csv",
        _ => "application/octet-stream",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asset_paths_stay_under_root() {
        let root = Path::new("/srv/assets");
        assert_eq!(resolve_asset(root, "visual/00001.mp4"), Some(root.join("visual/00001.mp4")));
        assert_eq!(resolve_asset(root, "../etc/passwd"), None);
        assert_eq!(resolve_asset(root, "/etc/passwd"), None);
        assert_eq!(content_type(Path::new("a/b.wav")), "audio/wav");
    }
}
