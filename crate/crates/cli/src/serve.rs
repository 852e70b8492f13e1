//! HTTP API for the web UI. Runs execute on a bounded pool of blocking
//! workers and are kept in an in-memory registry.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use qsim_core::des::KindRegistry;
use qsim_core::devices::catalog;

use crate::experiments::run_graph;
use crate::graph::{parse_graph, validate, validate_text, Issue};
use crate::results::ResultSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServeConfig {
    pub default_cutoff: usize,
    /// Runs executing at once; later submissions stay queued.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Error,
}

#[derive(Debug, Clone)]
struct RunEntry {
    status: RunStatus,
    results: Option<Arc<ResultSet>>,
    error: Option<String>,
}

struct AppState {
    config: ServeConfig,
    runs: RwLock<HashMap<String, RunEntry>>,
    next_id: AtomicU64,
    workers: Arc<Semaphore>,
}

impl AppState {
    fn set(&self, id: &str, f: impl FnOnce(&mut RunEntry)) {
        if let Some(entry) = self.runs.write().expect("run registry lock").get_mut(id) {
            f(entry);
        }
    }

    fn get(&self, id: &str) -> Option<RunEntry> {
        self.runs.read().expect("run registry lock").get(id).cloned()
    }
}

struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>, pointer: impl Into<String>) -> Self {
        Self { status, body: json!({ "error": error.into(), "pointer": pointer.into() }) }
    }

    fn invalid(issues: Vec<Issue>) -> Self {
        let first = issues.first().cloned().unwrap_or_else(|| Issue::new("", "invalid graph"));
        let body = json!({ "error": first.error, "pointer": first.pointer, "errors": issues });
        Self { status: StatusCode::BAD_REQUEST, body }
    }

    fn unknown_run(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no run with id {id:?}"), "")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

async fn devices() -> Json<Value> {
    let kinds: Vec<Value> = KindRegistry::default().kinds().map(|(name, parent)| json!({ "name": name, "parent": parent })).collect();
    Json(json!({ "devices": catalog(), "signal_kinds": kinds }))
}

async fn validate_graph(body: Bytes) -> Json<Value> {
    let errors = validate_text(&String::from_utf8_lossy(&body));
    Json(json!({ "valid": errors.is_empty(), "errors": errors }))
}

async fn submit(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let graph = parse_graph(&String::from_utf8_lossy(&body)).map_err(|i| ApiError::invalid(vec![i]))?;
    let issues = validate(&graph);
    if !issues.is_empty() {
        return Err(ApiError::invalid(issues));
    }
    let id = format!("run-{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    state
        .runs
        .write()
        .expect("run registry lock")
        .insert(id.clone(), RunEntry { status: RunStatus::Queued, results: None, error: None });

    let task_state = Arc::clone(&state);
    let run_id = id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = Arc::clone(&task_state.workers).acquire_owned().await else { return };
        task_state.set(&run_id, |e| e.status = RunStatus::Running);
        let cutoff = task_state.config.default_cutoff;
        let outcome = tokio::task::spawn_blocking(move || run_graph(&graph, cutoff)).await;
        task_state.set(&run_id, |e| match outcome {
            Ok(Ok(mut rs)) => {
                rs.run_id = Some(run_id.clone());
                e.status = RunStatus::Done;
                e.results = Some(Arc::new(rs));
            }
            Ok(Err(err)) => {
                e.status = RunStatus::Error;
                e.error = Some(err.to_string());
            }
            Err(join) => {
                e.status = RunStatus::Error;
                e.error = Some(format!("run aborted: {join}"));
            }
        });
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": id, "status": RunStatus::Queued }))).into_response())
}

async fn run_status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::unknown_run(&id))?;
    Ok(Json(json!({ "run_id": id, "status": entry.status, "error": entry.error })))
}

async fn run_results(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::unknown_run(&id))?;
    match (entry.status, entry.results) {
        (RunStatus::Done, Some(rs)) => Ok(Json(rs.as_ref()).into_response()),
        (RunStatus::Error, _) => Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("run failed: {}", entry.error.unwrap_or_default()),
            "",
        )),
        _ => Err(ApiError::new(StatusCode::CONFLICT, "run has not finished", "")),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint", "")
}

pub fn router(config: ServeConfig) -> Router {
    let state = Arc::new(AppState {
        config,
        runs: RwLock::new(HashMap::new()),
        next_id: AtomicU64::new(0),
        workers: Arc::new(Semaphore::new(config.workers.max(1))),
    });
    Router::new()
        .route("/devices", get(devices))
        .route("/experiments", post(submit))
        .route("/runs/{id}", get(run_status))
        .route("/runs/{id}/results", get(run_results))
        .route("/validate", post(validate_graph))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(bind: SocketAddr, config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("qsim serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(config)).await
}
