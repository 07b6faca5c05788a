//! HTTP API for running live sessions.
//!
//! | method | path | body / query | success |
//! |---|---|---|---|
//! | POST | `/sessions` | none | `201` session with its SLP labels |
//! | GET | `/sessions/{id}/next` | | next trial or `{"complete": true}` |
//! | POST | `/sessions/{id}/responses` | `{trial_index, response, response_ms}` | ack |
//! | GET | `/export` | `format=csv\|jsonl` | dataset file |
//!
//! Errors are `{"code": ..., "message": ...}` with `code` one of `NotFound`,
//! `Conflict`, `Sequencing`, `Validation` (or `Internal` for I/O failures).
//! The target figure is sent without any label.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use loshot_core::response_data::{
    assign_condition, next_trial, trial_at, PresentationOrder, RecordOutcome, TRIALS_PER_SESSION,
};
use loshot_core::stimulus::figure_svg;
use loshot_core::{Error, ExportFormat, FeatureVector, Session, SlpCatalog, SoftLabel, StimulusConfig};

use crate::store::Store;

pub struct ServiceConfig {
    pub stimuli: StimulusConfig,
    pub catalog: SlpCatalog,
    pub data_dir: PathBuf,
    /// Fixes session ids and condition draws, for tests and demos.
    pub seed: Option<u64>,
    pub static_dir: Option<PathBuf>,
}

struct Inner {
    store: Store,
    rng: ChaCha8Rng,
}

#[derive(Clone)]
pub struct AppState {
    stimuli: Arc<StimulusConfig>,
    catalog: Arc<SlpCatalog>,
    inner: Arc<Mutex<Inner>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    NotFound,
    Conflict,
    Sequencing,
    Validation,
    Internal,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotFound(_) => ErrorCode::NotFound,
            Error::Conflict(_) => ErrorCode::Conflict,
            Error::Sequencing { .. } => ErrorCode::Sequencing,
            Error::Validation(_)
            | Error::InvalidArgument(_)
            | Error::InvalidSoftLabel(_)
            | Error::RangeViolation { .. }
            | Error::Parse { .. } => ErrorCode::Validation,
            _ => ErrorCode::Internal,
        };
        ApiError {
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.code {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict | ErrorCode::Sequencing => StatusCode::CONFLICT,
            ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub slp_id: u32,
    /// Dinosaur 1 probabilities followed by Dinosaur 2 probabilities.
    pub slp: [f64; 6],
    pub manifold_order: [u8; 2],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabeledFigure {
    pub svg: String,
    pub label: [f64; 3],
    /// `label` as whole percentages.
    pub percent: [u32; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFigure {
    pub svg: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrialPayload {
    pub complete: bool,
    pub session_id: String,
    pub trial_index: u32,
    pub trials_total: u32,
    pub manifold_id: u8,
    pub d1: LabeledFigure,
    pub d2: LabeledFigure,
    pub target: TargetFigure,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompletePayload {
    pub complete: bool,
    pub session_id: String,
    pub trials_total: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseSubmission {
    pub trial_index: u32,
    pub response: u8,
    #[serde(default)]
    pub response_ms: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseAck {
    pub session_id: String,
    pub trial_index: u32,
    /// `recorded` for a new response, `duplicate` for an identical resubmission.
    pub status: String,
    pub next_trial_index: u32,
    pub complete: bool,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

pub fn build(config: ServiceConfig) -> loshot_core::Result<Router> {
    let store = Store::open(&config.data_dir)?;
    let rng = match config.seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_entropy(),
    };
    let state = AppState {
        stimuli: Arc::new(config.stimuli),
        catalog: Arc::new(config.catalog),
        inner: Arc::new(Mutex::new(Inner { store, rng })),
    };
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/responses", post(respond))
        .route("/export", get(export))
        .with_state(state);
    Ok(match config.static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    })
}

fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

async fn create_session(State(state): State<AppState>) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let mut inner = state.inner.lock().await;
    let (session_id, seed) = loop {
        let seed = inner.rng.next_u64();
        let id = format!("s-{:016x}", inner.rng.next_u64());
        if inner.store.dataset().session(&id).is_none() {
            break (id, seed);
        }
    };
    let (slp_id, manifold_order) = assign_condition(seed, &state.catalog);
    let session = Session::new(session_id.clone(), slp_id, manifold_order, now_ms(), seed);
    inner.store.add_session(session)?;
    let slp = state.catalog.get(slp_id)?;
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id,
            slp_id,
            slp: slp.flatten(),
            manifold_order,
        }),
    ))
}

fn labeled(v: &FeatureVector, label: &SoftLabel, stimuli: &StimulusConfig) -> ApiResult<LabeledFigure> {
    Ok(LabeledFigure {
        svg: figure_svg(v, &stimuli.schema)?,
        label: *label.probs(),
        percent: label.percentages(),
    })
}

async fn next(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = {
        let inner = state.inner.lock().await;
        inner
            .store
            .dataset()
            .session(&id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("session {id}")))?
    };
    if session.is_complete() {
        return Ok(Json(CompletePayload {
            complete: true,
            session_id: id,
            trials_total: TRIALS_PER_SESSION,
        })
        .into_response());
    }
    let order = PresentationOrder::for_session(&session);
    let trial = next_trial(&session, &state.stimuli, &order)?;
    let slp = state.catalog.get(session.slp_id)?;
    let payload = TrialPayload {
        complete: false,
        session_id: id,
        trial_index: trial.trial_index,
        trials_total: TRIALS_PER_SESSION,
        manifold_id: trial.manifold_id,
        d1: labeled(&trial.d1, &slp.d1, &state.stimuli)?,
        d2: labeled(&trial.d2, &slp.d2, &state.stimuli)?,
        target: TargetFigure {
            svg: figure_svg(&trial.target, &state.stimuli.schema)?,
        },
    };
    Ok(Json(payload).into_response())
}

async fn respond(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<ResponseAck>> {
    let sub: ResponseSubmission = serde_json::from_slice(&body).map_err(|e| ApiError {
        code: ErrorCode::Validation,
        message: format!("malformed body: {e}"),
    })?;
    let mut inner = state.inner.lock().await;
    let session = inner
        .store
        .dataset()
        .session(&id)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("session {id}")))?;
    if sub.trial_index >= TRIALS_PER_SESSION {
        return Err(Error::Validation(format!("trial index {} out of range", sub.trial_index)).into());
    }
    let order = PresentationOrder::for_session(&session);
    let trial = trial_at(&session, sub.trial_index, &state.stimuli, &order)?;
    let outcome = inner
        .store
        .record_response(trial.record(&id, sub.response, sub.response_ms))?;
    let cursor = inner
        .store
        .dataset()
        .session(&id)
        .map_or(0, Session::trial_cursor);
    Ok(Json(ResponseAck {
        session_id: id,
        trial_index: sub.trial_index,
        status: match outcome {
            RecordOutcome::Appended => "recorded",
            RecordOutcome::Duplicate => "duplicate",
        }
        .into(),
        next_trial_index: cursor,
        complete: cursor >= TRIALS_PER_SESSION,
    }))
}

async fn export(State(state): State<AppState>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let format: ExportFormat = q.format.as_deref().unwrap_or("csv").parse()?;
    let bytes = state.inner.lock().await.store.dataset().export(format);
    let content_type = match format {
        ExportFormat::Csv => "text/csv; charset=utf-8",
        ExportFormat::Jsonl => "application/x-ndjson",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

/// Binds and serves until ctrl-c.
pub async fn serve(config: ServiceConfig, port: u16) -> anyhow::Result<()> {
    let app = build(config)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
