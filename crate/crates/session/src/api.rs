use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use envpair_core::chat::{ChatBackend, ChatMessage, ChatRequest, ChatResponse, HttpChatBackend};
use envpair_core::metrics::neural::{ScoreRequest, ScoreResponse};
use envpair_core::sensors::RetryPolicy;
use envpair_core::taskgen::render_sensor_block;
use envpair_core::types::{EmissionReading, WeatherReading};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;
use tracing::{info, warn};

use crate::catalog::{PairCatalog, PairSummary};
use crate::session::{GroundTruth, Session, SessionError, SessionSpec, SessionTask, Transcript};
use crate::store::SessionStore;
use crate::stub::{stub_scores, StubBackend};

pub const STUB: &str = "stub";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// `"stub"`, a registered name, or an `http(s)://` chat server root.
    pub default_backend: String,
    pub system_prompt: Option<String>,
    pub backend_timeout: Duration,
    /// Backend calls in flight across all sessions.
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            default_backend: STUB.into(),
            system_prompt: None,
            backend_timeout: Duration::from_secs(120),
            max_in_flight: 8,
            retry: RetryPolicy {
                max_attempts: 2,
                backoff_base_ms: 500,
                jitter: true,
            },
        }
    }
}

/// Sensor data for one image: a pre-rendered block or raw readings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SensorInput {
    Rendered(String),
    Readings {
        weather: WeatherReading,
        #[serde(default)]
        emissions: Option<EmissionReading>,
    },
}

impl SensorInput {
    fn render(&self) -> String {
        match self {
            SensorInput::Rendered(s) => s.clone(),
            SensorInput::Readings { weather, emissions } => render_sensor_block(weather, emissions.as_ref()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    pub task: SessionTask,
    #[serde(default)]
    pub image_refs: Vec<String>,
    #[serde(default)]
    pub pair_id: Option<String>,
    #[serde(default)]
    pub sensors: Vec<Option<SensorInput>>,
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub whatif_question: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnReply {
    pub reply: String,
}

pub struct Service {
    store: SessionStore,
    catalog: PairCatalog,
    stub: Arc<StubBackend>,
    backends: Mutex<HashMap<String, Arc<dyn ChatBackend>>>,
    permits: Semaphore,
    config: ServiceConfig,
}

impl Service {
    pub fn new(store: SessionStore, catalog: PairCatalog, config: ServiceConfig) -> Self {
        let stub = Arc::new(StubBackend::new());
        let mut backends: HashMap<String, Arc<dyn ChatBackend>> = HashMap::new();
        backends.insert(STUB.into(), stub.clone());
        Self {
            store,
            catalog,
            stub,
            backends: Mutex::new(backends),
            permits: Semaphore::new(config.max_in_flight.max(1)),
            config,
        }
    }

    pub fn stub(&self) -> &StubBackend {
        &self.stub
    }

    pub fn catalog(&self) -> &PairCatalog {
        &self.catalog
    }

    /// Makes `name` usable as a session backend.
    pub fn register_backend(&self, name: &str, backend: Arc<dyn ChatBackend>) {
        self.backends.lock().unwrap().insert(name.into(), backend);
    }

    fn backend(&self, name: &str) -> Result<Arc<dyn ChatBackend>, SessionError> {
        let mut backends = self.backends.lock().unwrap();
        if let Some(b) = backends.get(name) {
            return Ok(b.clone());
        }
        if !(name.starts_with("http://") || name.starts_with("https://")) {
            return Err(SessionError::Validation(format!("unknown backend {name:?}")));
        }
        let b: Arc<dyn ChatBackend> = Arc::new(
            HttpChatBackend::new(name, self.config.backend_timeout, self.config.retry.clone())
                .map_err(|e| SessionError::Validation(e.to_string()))?,
        );
        backends.insert(name.into(), b.clone());
        Ok(b)
    }

    pub fn create(&self, req: CreateRequest) -> Result<String, SessionError> {
        let backend = req.backend.unwrap_or_else(|| self.config.default_backend.clone());
        self.backend(&backend)?;
        let mut spec = match req.pair_id {
            Some(pair_id) => {
                if !req.image_refs.is_empty() || !req.sensors.is_empty() {
                    return Err(SessionError::Validation(
                        "give either pair_id or image_refs with sensors, not both".into(),
                    ));
                }
                let entry = self.catalog.get(&pair_id).ok_or(SessionError::NotFound {
                    kind: "pair",
                    id: pair_id,
                })?;
                entry.session_spec(req.task)
            }
            None => SessionSpec {
                image_refs: req.image_refs,
                sensor_payloads: req.sensors.iter().map(|s| s.as_ref().map(SensorInput::render)).collect(),
                ..Default::default()
            },
        };
        if req.whatif_question.is_some() {
            spec.whatif_question = req.whatif_question;
        }
        spec.model = req.model;
        spec.system_prompt = self.config.system_prompt.clone();
        let id = format!("{:032x}", rand::random::<u128>());
        let session = Session::create(id.clone(), req.task, spec, &backend, Utc::now())?;
        self.store.insert(session)?;
        info!(session = %id, task = %req.task, backend = %backend, "session created");
        Ok(id)
    }

    fn handle(&self, id: &str) -> Result<crate::store::SessionHandle, SessionError> {
        self.store.get(id).ok_or_else(|| SessionError::NotFound {
            kind: "session",
            id: id.into(),
        })
    }

    async fn exchange(&self, session: &mut Session, backend: &dyn ChatBackend, text: &str) -> Result<String, SessionError> {
        let user = session.compose_user(text)?;
        let request = session.request_with(&user);
        let reply = {
            let _permit = self.permits.acquire().await.expect("semaphore is never closed");
            backend.complete(&request).await?
        };
        session.history.push(user);
        session.history.push(ChatMessage::assistant(&reply));
        Ok(reply)
    }

    /// One exchange. The history is untouched if the backend fails.
    pub async fn post_turn(&self, id: &str, text: &str) -> Result<String, SessionError> {
        let handle = self.handle(id)?;
        let mut guard = handle
            .try_lock()
            .map_err(|_| SessionError::Conflict("a turn is already in flight for this session".into()))?;
        let backend = self.backend(&guard.backend)?;
        let mut next = guard.clone();
        let reply = self.exchange(&mut next, backend.as_ref(), text).await.inspect_err(|e| {
            warn!(session = %id, error = %e, "turn failed");
        })?;
        self.store.persist(&next)?;
        *guard = next;
        Ok(reply)
    }

    /// Runs the canonical turn sequence on a fresh session, all or nothing.
    pub async fn run_script(&self, id: &str) -> Result<Transcript, SessionError> {
        let handle = self.handle(id)?;
        let mut guard = handle
            .try_lock()
            .map_err(|_| SessionError::Conflict("a turn is already in flight for this session".into()))?;
        if !guard.dialogue().is_empty() {
            return Err(SessionError::Conflict("script needs a session with empty history".into()));
        }
        let script = guard.script()?;
        let backend = self.backend(&guard.backend)?;
        let mut next = guard.clone();
        for text in &script {
            self.exchange(&mut next, backend.as_ref(), text).await?;
        }
        self.store.persist(&next)?;
        *guard = next;
        Ok(guard.transcript())
    }

    pub async fn transcript(&self, id: &str) -> Result<Transcript, SessionError> {
        Ok(self.handle(id)?.lock().await.transcript())
    }

    /// Never touches the history or any backend.
    pub async fn ground_truth(&self, id: &str) -> Result<Option<GroundTruth>, SessionError> {
        Ok(self.handle(id)?.lock().await.ground_truth.clone())
    }

    pub fn delete(&self, id: &str) -> Result<(), SessionError> {
        if self.store.remove(id)? {
            Ok(())
        } else {
            Err(SessionError::NotFound {
                kind: "session",
                id: id.into(),
            })
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            SessionError::Validation(_) => (StatusCode::BAD_REQUEST, "validation"),
            SessionError::NotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            SessionError::Backend(_) => (StatusCode::BAD_GATEWAY, "backend"),
            SessionError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        (status, Json(json!({"error": kind, "message": self.to_string()}))).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, SessionError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| SessionError::Validation(e.body_text()))
}

type Shared = State<Arc<Service>>;

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn list_pairs(State(svc): Shared) -> Json<Vec<PairSummary>> {
    Json(svc.catalog.summaries())
}

async fn create(State(svc): Shared, payload: Result<Json<CreateRequest>, JsonRejection>) -> Result<(StatusCode, Json<Created>), SessionError> {
    let session_id = svc.create(body(payload)?)?;
    Ok((StatusCode::CREATED, Json(Created { session_id })))
}

async fn post_message(
    State(svc): Shared,
    Path(id): Path<String>,
    payload: Result<Json<TurnRequest>, JsonRejection>,
) -> Result<Json<TurnReply>, SessionError> {
    let reply = svc.post_turn(&id, &body(payload)?.text).await?;
    Ok(Json(TurnReply { reply }))
}

async fn script(State(svc): Shared, Path(id): Path<String>) -> Result<Json<Transcript>, SessionError> {
    svc.run_script(&id).await.map(Json)
}

async fn get_session(State(svc): Shared, Path(id): Path<String>) -> Result<Json<Transcript>, SessionError> {
    svc.transcript(&id).await.map(Json)
}

async fn ground_truth(State(svc): Shared, Path(id): Path<String>) -> Result<Json<GroundTruth>, SessionError> {
    svc.ground_truth(&id).await?.map(Json).ok_or(SessionError::NotFound {
        kind: "ground truth for session",
        id,
    })
}

async fn delete_session(State(svc): Shared, Path(id): Path<String>) -> Result<StatusCode, SessionError> {
    svc.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn stub_chat(State(svc): Shared, payload: Result<Json<ChatRequest>, JsonRejection>) -> Result<Json<ChatResponse>, SessionError> {
    let content = svc.stub.complete(&body(payload)?).await?;
    Ok(Json(ChatResponse { content }))
}

async fn stub_score(payload: Result<Json<ScoreRequest>, JsonRejection>) -> Result<Json<ScoreResponse>, SessionError> {
    Ok(Json(stub_scores(&body(payload)?)))
}

async fn stub_requests(State(svc): Shared) -> Json<Vec<String>> {
    Json(svc.stub.requests())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/pairs", get(list_pairs))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/script", post(script))
        .route("/sessions/{id}/ground_truth", get(ground_truth))
        .route("/stub/v1/chat", post(stub_chat))
        .route("/stub/v1/score", post(stub_score))
        .route("/stub/requests", get(stub_requests))
        .with_state(service)
}

pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
