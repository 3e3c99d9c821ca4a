//! HTTP API for interactive rollouts of trained behavior functions.
//!
//! The server owns the physics: clients create a session, then ask it to
//! step, optionally replacing the command first. Bodies are JSON.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State as AxState};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use udrl_core::env::{EnvKind, Environment, State, StepResult};
use udrl_core::eval::{self, ImportanceVector, InferenceSpec};
use udrl_core::models::BehaviorFunction;
use udrl_core::udrl::Command;
use udrl_core::UdrlError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub env: EnvKind,
    pub family: String,
    pub seed: u64,
    pub default_command: Command,
    pub feature_names: Vec<String>,
}

#[derive(Clone)]
pub struct ModelEntry {
    pub info: ModelInfo,
    pub model: Arc<dyn BehaviorFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub model_id: String,
    pub env: EnvKind,
    pub state: State,
    pub command: Command,
    pub step_count: usize,
    pub cumulative_return: f64,
    pub terminal: bool,
}

struct Session {
    model: Arc<dyn BehaviorFunction>,
    env: Environment,
    view: SessionState,
}

/// Shared server state: immutable models plus the open sessions, each behind
/// its own lock so steps on different sessions never wait on each other.
pub struct AppState {
    models: BTreeMap<String, ModelEntry>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(entries: impl IntoIterator<Item = ModelEntry>) -> Arc<Self> {
        Arc::new(AppState {
            models: entries.into_iter().map(|e| (e.info.model_id.clone(), e)).collect(),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        })
    }

    fn model(&self, id: &str) -> Result<&ModelEntry, ApiError> {
        self.models
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown model {id:?}")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(message: String) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<UdrlError> for ApiError {
    fn from(e: UdrlError) -> Self {
        let status = match e {
            UdrlError::UnsupportedModel(_)
            | UdrlError::InvalidAction { .. }
            | UdrlError::Dimension { .. }
            | UdrlError::InvalidConfig(_) => StatusCode::BAD_REQUEST,
            UdrlError::StepLimit { .. } | UdrlError::EpisodeFinished => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Wire form of a command; `d_t` is signed so that bad values reach validation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CommandBody {
    pub d_r: f64,
    pub d_t: i64,
}

impl CommandBody {
    fn validate(self) -> Result<Command, ApiError> {
        if !self.d_r.is_finite() {
            return Err(ApiError::bad_request("d_r must be finite"));
        }
        if self.d_t < 1 || self.d_t > u32::MAX as i64 {
            return Err(ApiError::bad_request(format!("d_t must be at least 1, got {}", self.d_t)));
        }
        Ok(Command::new(self.d_r, self.d_t as u32))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelList {
    pub models: Vec<ModelInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub model_id: String,
    pub d_r: f64,
    pub d_t: i64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct StepRequest {
    #[serde(default)]
    pub override_command: Option<CommandBody>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepResponse {
    pub action: usize,
    pub probabilities: Vec<f64>,
    pub step: StepResult,
    pub session: SessionState,
}

#[derive(Debug, Deserialize)]
pub struct ImportanceQuery {
    /// `local` (default) or `global`.
    pub kind: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalRequest {
    pub model_id: String,
    pub d_r: f64,
    pub d_t: i64,
    #[serde(default = "default_eval_episodes")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_eval_episodes() -> usize {
    100
}

async fn list_models(AxState(app): AxState<Arc<AppState>>) -> Json<ModelList> {
    Json(ModelList {
        models: app.models.values().map(|e| e.info.clone()).collect(),
    })
}

async fn create_session(
    AxState(app): AxState<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let entry = app.model(&req.model_id)?;
    let command = CommandBody {
        d_r: req.d_r,
        d_t: req.d_t,
    }
    .validate()?;
    let env = Environment::new(entry.info.env, req.seed);
    let session_id = format!("s{}", app.next_session.fetch_add(1, Ordering::Relaxed));
    let view = SessionState {
        session_id: session_id.clone(),
        model_id: req.model_id.clone(),
        env: entry.info.env,
        state: env.state().clone(),
        command,
        step_count: 0,
        cumulative_return: 0.0,
        terminal: false,
    };
    let session = Session {
        model: entry.model.clone(),
        env,
        view: view.clone(),
    };
    app.sessions
        .lock()
        .unwrap()
        .insert(session_id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn step_session(
    AxState(app): AxState<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<StepRequest>>,
) -> ApiResult<StepResponse> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let override_command = req.override_command.map(CommandBody::validate).transpose()?;
    let session = app.session(&id)?;
    let mut s = session.lock().unwrap();
    if s.view.terminal {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("session {id} has ended")));
    }
    if let Some(c) = override_command {
        s.view.command = c;
    }
    let x = s.view.command.feature_vector(s.env.state());
    let probabilities = s.model.predict_proba(&x)?;
    let action = udrl_core::models::argmax(&probabilities);
    let step = s.env.step(action)?;
    let view = &mut s.view;
    view.state = step.next_state.clone();
    view.command = view.command.advance(step.reward);
    view.step_count += 1;
    view.cumulative_return += step.reward;
    view.terminal = step.done();
    Ok(Json(StepResponse {
        action,
        probabilities,
        step,
        session: s.view.clone(),
    }))
}

async fn session_importance(
    AxState(app): AxState<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ImportanceQuery>,
) -> ApiResult<ImportanceVector> {
    let session = app.session(&id)?;
    let s = session.lock().unwrap();
    let v = match q.kind.as_deref().unwrap_or("local") {
        "global" => eval::global_mdi(s.model.as_ref())?,
        "local" => {
            let x = s.view.command.feature_vector(&s.view.state);
            eval::local_path_importance(s.model.as_ref(), &x)?
        }
        other => return Err(ApiError::bad_request(format!("kind must be local or global, got {other:?}"))),
    };
    Ok(Json(v))
}

async fn delete_session(AxState(app): AxState<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match app.sessions.lock().unwrap().remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("unknown session {id:?}"))),
    }
}

async fn run_eval(AxState(app): AxState<Arc<AppState>>, Json(req): Json<EvalRequest>) -> ApiResult<eval::EvalStats> {
    let entry = app.model(&req.model_id)?.clone();
    let command = CommandBody {
        d_r: req.d_r,
        d_t: req.d_t,
    }
    .validate()?;
    if req.n == 0 {
        return Err(ApiError::bad_request("n must be at least 1"));
    }
    let mut spec = InferenceSpec::new(entry.info.env, command);
    spec.n_episodes = req.n;
    let stats = tokio::task::spawn_blocking(move || eval::evaluate(entry.model.as_ref(), &spec, req.seed))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(stats))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", delete(delete_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/importance", get(session_importance))
        .route("/eval", post(run_eval))
        .with_state(state)
}
