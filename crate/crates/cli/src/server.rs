//! JSON API hosting interactive discovery sessions.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/health` | | `{"status": "ok"}` |
//! | POST | `/logs` | [`UploadRequest`] | [`LogSummary`] |
//! | POST | `/sessions` | [`CreateSessionRequest`] | [`SessionCreated`] |
//! | GET | `/sessions/{id}` | | [`SessionView`] |
//! | POST | `/sessions/{id}/extend` | [`ExtendRequest`] | [`ExtendResponse`] |
//! | GET | `/sessions/{id}/patterns/{pid}/dashboard` | | `DashboardData` |
//! | GET | `/sessions/{id}/export` | | session record JSON, replayable |
//!
//! Errors are `{"error": "..."}` with status 400 (malformed request), 404
//! (unknown log, session or pattern), 409 (extension already running or
//! session finished), 413 (upload too large) or 422 (request understood
//! but nothing to extend).
//!
//! Sessions live in memory only. A session has one writer at a time;
//! `GET` requests read the last completed snapshot and never wait for a
//! running extension.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use procpat_core::discovery::{
    DiscoveryConfig, DiscoveryError, DiscoverySession, Iteration, SessionRecord, SessionStatus,
};
use procpat_core::extension::ExtensionRule;
use procpat_core::log_model::{
    read_event_log, validate_log, EventLog, LoadWarning, LogSchema, ValidationReport,
};
use procpat_core::patterns::PatternId;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::config::ServerSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status: status.as_u16(),
            error: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, message)
    }

    fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<DiscoveryError> for ApiError {
    fn from(e: DiscoveryError) -> Self {
        let status = match &e {
            DiscoveryError::UnknownPatternId(_) => StatusCode::NOT_FOUND,
            DiscoveryError::EmptySelection | DiscoveryError::Config(_) => StatusCode::BAD_REQUEST,
            DiscoveryError::NotAwaitingSelection(_) => StatusCode::CONFLICT,
            DiscoveryError::NoExtensionPossible | DiscoveryError::TooManyCandidates { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Upload a log either inline (`csv`) or by a path relative to the
/// server's logs directory (`path`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UploadRequest {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub schema: LogSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub log_id: String,
    pub cases: usize,
    pub events: usize,
    pub alphabet: Vec<String>,
    pub warnings: Vec<LoadWarning>,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub log_id: String,
    #[serde(default)]
    pub config: DiscoveryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub created: String,
    pub status: SessionStatus,
    pub iteration: Iteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub log_id: String,
    pub created: String,
    pub record: SessionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendRequest {
    pub pattern_ids: Vec<PatternId>,
    /// Defaults to the session's configured rules.
    #[serde(default)]
    pub rules: Option<BTreeSet<ExtensionRule>>,
    /// Overrides the configured minimum case frequency for this step.
    #[serde(default)]
    pub min_case_frequency: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendResponse {
    pub status: SessionStatus,
    pub iteration: Iteration,
}

pub struct ApiSession {
    pub id: String,
    pub log_id: String,
    pub created: String,
    session: Arc<Mutex<DiscoverySession>>,
    snapshot: RwLock<Arc<SessionRecord>>,
}

impl ApiSession {
    fn snapshot(&self) -> Arc<SessionRecord> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn publish(&self, session: &DiscoverySession) {
        *self.snapshot.write().expect("snapshot lock") = Arc::new(session.record());
    }

    /// The writer lock of the session, exposed so callers can serialize
    /// their own work with API extensions.
    pub fn writer(&self) -> Arc<Mutex<DiscoverySession>> {
        self.session.clone()
    }
}

pub struct AppState {
    settings: ServerSettings,
    logs: RwLock<HashMap<String, Arc<EventLog>>>,
    sessions: RwLock<HashMap<String, Arc<ApiSession>>>,
}

impl AppState {
    pub fn new(settings: ServerSettings) -> Arc<AppState> {
        Arc::new(AppState {
            settings,
            logs: RwLock::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn session(&self, id: &str) -> Option<Arc<ApiSession>> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
    }

    fn log(&self, id: &str) -> Option<Arc<EventLog>> {
        self.logs.read().expect("logs lock").get(id).cloned()
    }

    fn session_or_404(&self, id: &str) -> Result<Arc<ApiSession>, ApiError> {
        self.session(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.settings.max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/logs", post(upload_log))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/extend", post(extend))
        .route("/sessions/{id}/patterns/{pid}/dashboard", get(dashboard))
        .route("/sessions/{id}/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(settings: ServerSettings) -> std::io::Result<()> {
    let addr: SocketAddr = format!("{}:{}", settings.host, settings.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(settings)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> T + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// Resolves `rel` inside `root`, refusing absolute paths and `..`.
fn contained(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    rel.components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
        .then(|| root.join(rel))
}

async fn upload_log(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<LogSummary> {
    let req: UploadRequest = parse_body(&body)?;
    let text = match (req.csv, req.path) {
        (Some(csv), None) => csv,
        (None, Some(path)) => {
            let root = state
                .settings
                .logs_dir
                .clone()
                .ok_or_else(|| ApiError::bad_request("server has no logs directory"))?;
            let file = contained(&root, &path)
                .ok_or_else(|| ApiError::bad_request("path must stay inside the logs directory"))?;
            tokio::fs::read_to_string(&file)
                .await
                .map_err(|e| ApiError::not_found(format!("cannot read `{path}`: {e}")))?
        }
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of `csv` and `path`",
            ))
        }
    };
    let schema = req.schema;
    let (log, warnings) = blocking(move || read_event_log(text.as_bytes(), &schema))
        .await?
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let log_id = uuid::Uuid::new_v4().simple().to_string();
    let summary = LogSummary {
        log_id: log_id.clone(),
        cases: log.len(),
        events: log.event_count(),
        alphabet: log.alphabet().iter().cloned().collect(),
        warnings,
        validation: validate_log(&log),
    };
    state
        .logs
        .write()
        .expect("logs lock")
        .insert(log_id, Arc::new(log));
    Ok(Json(summary))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<SessionCreated> {
    let req: CreateSessionRequest = parse_body(&body)?;
    let log = state
        .log(&req.log_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown log `{}`", req.log_id)))?;
    req.config
        .validate()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let session = blocking(move || DiscoverySession::new(log, req.config)).await??;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created = SessionCreated {
        session_id: id.clone(),
        created: now(),
        status: session.status(),
        iteration: session.latest().clone(),
    };
    let api = Arc::new(ApiSession {
        id: id.clone(),
        log_id: req.log_id,
        created: created.created.clone(),
        snapshot: RwLock::new(Arc::new(session.record())),
        session: Arc::new(Mutex::new(session)),
    });
    state
        .sessions
        .write()
        .expect("sessions lock")
        .insert(id, api);
    Ok(Json(created))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<SessionView> {
    let s = state.session_or_404(&id)?;
    Ok(Json(SessionView {
        session_id: s.id.clone(),
        log_id: s.log_id.clone(),
        created: s.created.clone(),
        record: (*s.snapshot()).clone(),
    }))
}

async fn extend(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<ExtendResponse> {
    let s = state.session_or_404(&id)?;
    let req: ExtendRequest = parse_body(&body)?;
    let mut guard = s
        .session
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "an extension is already running"))?;
    let api = s.clone();
    blocking(move || {
        let result = guard
            .step_filtered(&req.pattern_ids, req.rules.as_ref(), req.min_case_frequency)
            .cloned();
        api.publish(&guard);
        result.map(|iteration| ExtendResponse {
            status: guard.status(),
            iteration,
        })
    })
    .await?
    .map(Json)
    .map_err(ApiError::from)
}

async fn dashboard(
    State(state): State<Arc<AppState>>,
    UrlPath((id, pid)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    let s = state.session_or_404(&id)?;
    let guard = s.session.clone().lock_owned().await;
    let data = blocking(move || guard.dashboard(&PatternId(pid))).await??;
    Ok(Json(data).into_response())
}

async fn export(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let s = state.session_or_404(&id)?;
    let text = serde_json::to_string_pretty(&*s.snapshot())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}
