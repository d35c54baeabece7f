//! HTTP API for the vignette rating study.
//!
//! `GET /api/session/{id}` returns the blind rater view and
//! `POST /api/session/{id}/ratings` records one rater's full set of
//! judgments. Judgments arrive relative to the displayed order and are
//! stored relative to the neutral essay.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use mpi_core::vignette::{
    session_view, submission_records, RatingSession, RatingStore, RatingSubmission, SessionDir, VignetteError,
};

/// Loaded study state shared by all handlers.
pub struct AppState {
    session: RatingSession,
    view: Value,
    store: RatingStore,
}

impl AppState {
    pub fn load(dir: &SessionDir) -> Result<Self, VignetteError> {
        let session = dir.load_session()?;
        let essays = dir.load_essays()?;
        let view = session_view(&session, &essays)?;
        let store = dir.open_ratings()?;
        Ok(AppState { session, view, store })
    }

    pub fn session(&self) -> &RatingSession {
        &self.session
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<VignetteError> for ApiError {
    fn from(e: VignetteError) -> Self {
        let status = match e {
            VignetteError::UnknownSession(_) => StatusCode::NOT_FOUND,
            VignetteError::Closed(_) | VignetteError::DuplicateRating { .. } => StatusCode::CONFLICT,
            VignetteError::Incomplete(_) | VignetteError::UnknownItem(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn open_session<'a>(state: &'a AppState, id: &str) -> Result<&'a RatingSession, ApiError> {
    if state.session.id != id {
        return Err(VignetteError::UnknownSession(id.to_string()).into());
    }
    if !state.session.is_open() {
        return Err(VignetteError::Closed(id.to_string()).into());
    }
    Ok(&state.session)
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    open_session(&state, &id)?;
    Ok(Json(state.view.clone()))
}

async fn post_ratings(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = open_session(&state, &id)?;
    let submission: RatingSubmission =
        serde_json::from_slice(&body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid body: {e}")))?;
    if state.store.has_rater(submission.rater_id.trim()) {
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("rater {:?} has already submitted", submission.rater_id.trim()),
        ));
    }
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
    let records = submission_records(session, &submission, ts)?;
    let state = Arc::clone(&state);
    let n = records.len();
    // File appends block, so keep them off the async workers.
    tokio::task::spawn_blocking(move || state.store.append_all(&records))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    log::info!("recorded {n} ratings for session {id}");
    Ok(Json(json!({ "recorded": n })))
}

const INDEX: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>Rating study</title></head>\n<body><p>The rating API is available under <code>/api/session/{id}</code>.</p></body></html>\n";

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/session/{id}", get(get_session))
        .route("/api/session/{id}/ratings", post(post_ratings))
        .with_state(state)
}

/// Serves the study in `dir` until the process is stopped.
pub fn serve_blocking(dir: &SessionDir, addr: SocketAddr) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = Arc::new(AppState::load(dir)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("serving session {} on http://{}", state.session.id, listener.local_addr()?);
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
