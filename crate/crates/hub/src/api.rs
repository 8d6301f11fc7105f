//! HTTP routes: teacher accounts, question sync and session control.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, State, WebSocketUpgrade};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use edu_core::{
    merge_sync_payload, serialize_bank, BankIssue, QuestionDraft, QuestionOrder, SessionConfig,
    StartError, TeacherAccount, WrongPolicy,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex as AsyncMutex;
use tracing::{info, warn};

use crate::auth::{PasswordPolicy, TokenRegistry};
use crate::session::{HubClock, SessionHandle, StartRefused};
use crate::store::{persist_store, Store};
use crate::ws::serve_socket;

pub(crate) struct AppState {
    pub store: AsyncMutex<Store>,
    pub store_path: PathBuf,
    pub tokens: Mutex<TokenRegistry>,
    pub passwords: PasswordPolicy,
    pub session: SessionHandle,
    pub clock: HubClock,
    pub heartbeat: Duration,
}

type Shared = Arc<AppState>;

pub(crate) fn router(state: Shared) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/api/teachers/register", post(register))
        .route("/api/teachers/login", post(login))
        .route("/api/sync", post(sync))
        .route("/api/questions", get(list_questions))
        .route("/api/questions/{id}", delete(delete_question))
        .route("/api/session/start", post(start_session))
        .route("/api/session/stop", post(stop_session))
        .route("/api/session", get(session_status))
        .with_state(state)
}

#[derive(Debug)]
pub(crate) struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": code, "detail": detail.into() }),
        }
    }

    fn unauthorized(detail: &str) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", detail)
    }

    fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail)
    }

    fn validation(issues: &[BankIssue]) -> Self {
        let issues: Vec<Value> = issues
            .iter()
            .map(|issue| {
                json!({
                    "index": issue.index,
                    "question_id": issue.question_id,
                    "errors": issue.errors.iter().map(|e| json!({
                        "code": e.code(),
                        "detail": e.to_string(),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        Self {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "validation", "issues": issues }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))
}

/// A request carrying a live bearer token.
pub(crate) struct Teacher(pub String);

impl FromRequestParts<Shared> for Teacher {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &Shared,
    ) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let token = header
            .strip_prefix("Bearer ")
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ApiError::unauthorized("malformed authorization header"))?;
        let now = state.clock.now();
        let teacher = state
            .tokens
            .lock()
            .expect("token registry poisoned")
            .check(token, now)
            .ok_or_else(|| ApiError::unauthorized("token unknown or expired"))?;
        Ok(Teacher(teacher))
    }
}

async fn save(state: &AppState, store: &Store) -> Result<(), ApiError> {
    let snapshot = store.clone();
    let path = state.store_path.clone();
    tokio::task::spawn_blocking(move || persist_store(&snapshot, &path))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| {
            warn!(event = "persist_failed", error = %e);
            ApiError::internal(e.to_string())
        })
}

async fn ws_upgrade(State(state): State<Shared>, ws: WebSocketUpgrade) -> Response {
    let session = state.session.clone();
    let heartbeat = state.heartbeat;
    ws.on_upgrade(move |socket| serve_socket(socket, session, heartbeat))
}

#[derive(Deserialize)]
struct Credentials {
    username: String,
    password: String,
}

async fn register(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let creds: Credentials = parse_body(&body)?;
    let username = creds.username.trim().to_owned();
    if username.is_empty() || creds.password.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "malformed_body",
            "username and password must be non-empty",
        ));
    }
    let policy = state.passwords;
    let password = creds.password;
    let password_hash = tokio::task::spawn_blocking(move || policy.hash(&password))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;

    let mut store = state.store.lock().await;
    if store.teacher(&username).is_some() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "duplicate_username",
            format!("teacher {username:?} already exists"),
        ));
    }
    let mut next = store.clone();
    next.teachers.push(TeacherAccount {
        username: username.clone(),
        password_hash,
        created_at: state.clock.now(),
    });
    save(&state, &next).await?;
    *store = next;
    info!(event = "register", teacher = %username);
    Ok((StatusCode::CREATED, Json(json!({ "username": username }))).into_response())
}

async fn login(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let creds: Credentials = parse_body(&body)?;
    let stored = {
        let store = state.store.lock().await;
        store
            .teacher(creds.username.trim())
            .map(|t| (t.username.clone(), t.password_hash.clone()))
    };
    let Some((username, hash)) = stored else {
        return Err(ApiError::unauthorized("invalid credentials"));
    };
    let policy = state.passwords;
    let password = creds.password;
    let ok = tokio::task::spawn_blocking(move || policy.verify(&password, &hash))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    if !ok {
        return Err(ApiError::unauthorized("invalid credentials"));
    }
    let now = state.clock.now();
    let token = state
        .tokens
        .lock()
        .expect("token registry poisoned")
        .issue(&username, now);
    info!(event = "login", teacher = %username);
    Ok(Json(json!({ "token": token.token, "expires_at": token.expires_at })).into_response())
}

#[derive(Deserialize)]
struct SyncPayload {
    #[serde(default)]
    questions: Vec<QuestionDraft>,
    #[serde(default)]
    deletions: Vec<String>,
}

async fn sync(
    State(state): State<Shared>,
    Teacher(teacher): Teacher,
    body: Bytes,
) -> Result<Response, ApiError> {
    let payload: SyncPayload = parse_body(&body)?;
    let mut store = state.store.lock().await;
    let bank = merge_sync_payload(&store.bank, payload.questions, &payload.deletions).map_err(
        |issues| {
            info!(event = "sync_rejected", teacher = %teacher, issues = issues.len());
            ApiError::validation(&issues)
        },
    )?;
    if bank != store.bank {
        let mut next = store.clone();
        next.bank = bank;
        save(&state, &next).await?;
        *store = next;
    }
    let revision = store.bank.revision();
    info!(event = "sync", teacher = %teacher, revision, questions = store.bank.len());
    Ok(Json(json!({ "revision": revision })).into_response())
}

async fn list_questions(State(state): State<Shared>, _teacher: Teacher) -> Response {
    let doc = serialize_bank(&state.store.lock().await.bank);
    ([(header::CONTENT_TYPE, "application/json")], doc).into_response()
}

async fn delete_question(
    State(state): State<Shared>,
    Teacher(teacher): Teacher,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let mut store = state.store.lock().await;
    let Some(bank) = store.bank.without(&id) else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no question {id:?}"),
        ));
    };
    let mut next = store.clone();
    next.bank = bank;
    save(&state, &next).await?;
    *store = next;
    let revision = store.bank.revision();
    info!(event = "delete_question", teacher = %teacher, id = %id, revision);
    Ok(Json(json!({ "revision": revision })).into_response())
}

#[derive(Deserialize, Default)]
struct StartRequest {
    #[serde(default)]
    order: QuestionOrder,
    shuffle_seed: Option<u64>,
    wrong_policy: Option<WrongPolicy>,
    feedback_hold_ms: Option<u64>,
    press_debounce_ms: Option<u64>,
}

async fn start_session(
    State(state): State<Shared>,
    Teacher(teacher): Teacher,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: StartRequest = if body.iter().all(u8::is_ascii_whitespace) {
        StartRequest::default()
    } else {
        parse_body(&body)?
    };
    let defaults = SessionConfig::default();
    let config = SessionConfig {
        order: req.order,
        shuffle_seed: req.shuffle_seed.unwrap_or(defaults.shuffle_seed),
        wrong_policy: req.wrong_policy.unwrap_or(defaults.wrong_policy),
        feedback_hold_ms: req.feedback_hold_ms.unwrap_or(defaults.feedback_hold_ms),
        press_debounce_ms: req.press_debounce_ms.unwrap_or(defaults.press_debounce_ms),
    };
    // The session runs on a snapshot; later syncs do not touch it.
    let bank = state.store.lock().await.bank.clone();
    match state.session.start(bank, config).await {
        Ok(status) => {
            info!(event = "session_start_request", teacher = %teacher);
            Ok(Json(status).into_response())
        }
        Err(StartRefused::AlreadyRunning) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "session_running",
            "a session is already running",
        )),
        Err(StartRefused::Engine(StartError::EmptyBank)) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "EmptyBank",
            "the question bank is empty",
        )),
        Err(StartRefused::Engine(e @ StartError::ZeroFeedbackHold)) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "malformed_body",
            e.to_string(),
        )),
    }
}

async fn stop_session(
    State(state): State<Shared>,
    Teacher(teacher): Teacher,
) -> Result<Response, ApiError> {
    match state.session.stop().await {
        Some(summary) => {
            info!(event = "session_stop_request", teacher = %teacher);
            Ok(Json(summary).into_response())
        }
        None => Err(ApiError::new(
            StatusCode::CONFLICT,
            "no_session",
            "no session is running",
        )),
    }
}

async fn session_status(State(state): State<Shared>) -> Response {
    Json(state.session.status().await).into_response()
}
