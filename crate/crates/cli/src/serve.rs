use std::collections::{BTreeMap, VecDeque};
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use futures_util::stream::{self, Stream};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value as Json_};
use skillplan::learning::{DemoDoc, DemoFile, Demonstration};
use skillplan::session::{FeedbackMode, Session, SessionConfig, SessionError, SessionEvent};
use skillplan::thresholds::Thresholds;
use skillplan::world::snapshot::{load as load_scene_doc, SceneDoc};
use skillplan::world::FailureKind;
use tokio::sync::{watch, Mutex};

use crate::config::{
    load_library, load_scene, load_thresholds, robot, save_library, CliError, DetailChoice, PlannerArgs,
    PlannerChoice, PlannerFactory,
};

#[derive(Args, Clone, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Scene for sessions that do not name one.
    #[arg(long, default_value = "bowls_mug_tray")]
    pub scene: String,
    #[command(flatten)]
    pub planner: PlannerArgs,
    /// Library shared by sessions that do not name their own.
    #[arg(long, value_name = "FILE")]
    pub skills: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub thresholds: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub demos: Option<PathBuf>,
}

/// Server-wide defaults for new sessions.
#[derive(Clone, Debug)]
pub struct Defaults {
    pub scene: String,
    pub planner: PlannerFactory,
    pub thresholds: Thresholds,
    pub skills: Option<PathBuf>,
    pub demo_dir: Option<PathBuf>,
}

impl Defaults {
    pub fn from_args(args: &ServeArgs) -> Result<Self, CliError> {
        load_scene(&args.scene, None)?;
        Ok(Self {
            scene: args.scene.clone(),
            planner: args.planner.factory(PlannerChoice::Scripted)?,
            thresholds: load_thresholds(args.thresholds.as_deref())?,
            skills: args.skills.clone(),
            demo_dir: args.demos.clone(),
        })
    }
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            scene: "bowls_mug_tray".into(),
            planner: PlannerFactory::Scripted(skillplan::planner::PlanTable::bundled()),
            thresholds: Thresholds::default(),
            skills: None,
            demo_dir: None,
        }
    }
}

struct Hosted {
    session: Mutex<Session>,
    /// Events already published, readable without the session lock.
    log: StdMutex<Vec<SessionEvent>>,
    published: watch::Sender<usize>,
    skills: Option<PathBuf>,
    saved_version: StdMutex<u64>,
}

impl Hosted {
    fn publish(&self, session: &Session) {
        let mut log = self.log.lock().expect("log lock");
        let new = session.events_since(log.len());
        if new.is_empty() {
            return;
        }
        log.extend_from_slice(new);
        self.published.send_replace(log.len());
    }

    fn save_library(&self, session: &Session) -> Result<(), ApiError> {
        let Some(path) = &self.skills else { return Ok(()) };
        let mut saved = self.saved_version.lock().expect("version lock");
        if session.library().version() != *saved {
            save_library(path, session.library()).map_err(|e| ApiError::internal(e.to_string()))?;
            *saved = session.library().version();
        }
        Ok(())
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<StdMutex<BTreeMap<String, Arc<Hosted>>>>,
    next: Arc<AtomicU64>,
    defaults: Arc<Defaults>,
}

impl AppState {
    pub fn new(defaults: Defaults) -> Self {
        Self { defaults: Arc::new(defaults), ..Self::default() }
    }

    fn get(&self, id: &str) -> Result<Arc<Hosted>, ApiError> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::BadState(_) | SessionError::DuplicateName(_) | SessionError::DemoSourceUnavailable(_) => {
                StatusCode::CONFLICT
            }
            SessionError::EmptyTask | SessionError::InvalidDemo(_) => StatusCode::BAD_REQUEST,
            SessionError::PlannerFailure(_) | SessionError::MaxReplansExceeded(_) => StatusCode::BAD_GATEWAY,
            SessionError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        Self::bad_request(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed payload: {e}")))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    /// Bundled scene name or an inline scene.v1 document.
    scene: Option<Json_>,
    seed: Option<u64>,
    planner: Option<String>,
    skills: Option<PathBuf>,
    demo_dir: Option<PathBuf>,
    #[serde(default)]
    baseline: bool,
    grounded: Option<bool>,
    detail: Option<String>,
    max_replans: Option<usize>,
    #[serde(default)]
    slip: f64,
    #[serde(default)]
    topple: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskBody {
    task: String,
    #[serde(default)]
    feedback_mode: FeedbackMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackBody {
    #[serde(default)]
    text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DemoBody {
    File(DemoFile),
    One(DemoDoc),
}

#[derive(Deserialize)]
struct DemoQuery {
    finalize: Option<bool>,
}

#[derive(Deserialize)]
struct EventsQuery {
    since: Option<usize>,
}

fn build_session(defaults: &Defaults, body: CreateBody) -> Result<(Session, Option<PathBuf>), ApiError> {
    let mut world = match &body.scene {
        None => load_scene(&defaults.scene, body.seed)?,
        Some(Json_::String(name)) => skillplan::fixtures::scene(name, body.seed.unwrap_or(0))
            .ok_or_else(|| ApiError::bad_request(format!("unknown scene {name}")))?,
        Some(doc) => {
            let doc: SceneDoc =
                serde_json::from_value(doc.clone()).map_err(|e| ApiError::bad_request(format!("scene: {e}")))?;
            let mut w = load_scene_doc(&doc).map_err(|e| ApiError::bad_request(format!("scene: {e}")))?;
            if let Some(s) = body.seed {
                w.reseed(s);
            }
            w
        }
    };
    for (kind, p) in [(FailureKind::GraspSlip, body.slip), (FailureKind::PlaceTopple, body.topple)] {
        if p != 0.0 {
            world.inject_failure(kind, p).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
    }
    let planner = match body.planner.as_deref() {
        None => defaults.planner.clone(),
        Some("scripted") => PlannerArgs::default().factory(PlannerChoice::Scripted)?,
        Some("llm") => PlannerArgs::default().factory(PlannerChoice::Llm)?,
        Some(other) => return Err(ApiError::bad_request(format!("unknown planner {other:?}"))),
    };
    let detail = match body.detail.as_deref() {
        None | Some("name-and-docstring") => DetailChoice::NameAndDocstring,
        Some("name-only") => DetailChoice::NameOnly,
        Some(other) => return Err(ApiError::bad_request(format!("unknown detail {other:?}"))),
    };
    let skills = body.skills.or_else(|| defaults.skills.clone());
    let library = load_library(skills.as_deref())?;
    let mut config = SessionConfig {
        baseline: body.baseline,
        detail: detail.into(),
        grounded: body.grounded.unwrap_or(true),
        demo_dir: body.demo_dir.or_else(|| defaults.demo_dir.clone()),
        ..SessionConfig::default()
    };
    if let Some(m) = body.max_replans {
        config.max_replans = m;
    }
    let session = Session::new(robot(world, defaults.thresholds.clone()), library, planner.build(), config);
    Ok((session, skills))
}

async fn create(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: CreateBody = parse_body(&body)?;
    let defaults = app.defaults.clone();
    let (session, skills) = tokio::task::spawn_blocking(move || build_session(&defaults, body))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let id = format!("s{}", app.next.fetch_add(1, Ordering::SeqCst) + 1);
    let state = session.state_json();
    let hosted = Hosted {
        saved_version: StdMutex::new(session.library().version()),
        session: Mutex::new(session),
        log: StdMutex::new(vec![]),
        published: watch::channel(0).0,
        skills,
    };
    app.sessions.lock().expect("sessions lock").insert(id.clone(), Arc::new(hosted));
    Ok((StatusCode::CREATED, Json(json!({"id": id, "state": state}))).into_response())
}

async fn list(State(app): State<AppState>) -> Json<Json_> {
    let ids: Vec<String> = app.sessions.lock().expect("sessions lock").keys().cloned().collect();
    Json(json!({"sessions": ids}))
}

async fn remove(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    app.get(&id)?;
    app.sessions.lock().expect("sessions lock").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

/// Applies `f` under the session lock, then runs the session until it
/// blocks, publishing events as they happen.
async fn mutate<F>(hosted: Arc<Hosted>, f: F) -> Result<Json<Json_>, ApiError>
where
    F: FnOnce(&mut Session) -> Result<(), SessionError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let mut s = hosted.session.blocking_lock();
        let outcome = f(&mut s);
        hosted.publish(&s);
        outcome?;
        while s.advance() {
            hosted.publish(&s);
        }
        hosted.save_library(&s)?;
        Ok(Json(s.state_json()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn task(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    let body: TaskBody = parse_body(&body)?;
    mutate(hosted, move |s| s.start_task(&body.task, body.feedback_mode)).await
}

async fn feedback(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    let body: FeedbackBody = parse_body(&body)?;
    mutate(hosted, move |s| s.submit_feedback(&body.text)).await
}

async fn demo(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DemoQuery>,
    body: Bytes,
) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    let body: DemoBody = parse_body(&body)?;
    if let DemoBody::File(f) = &body {
        // re-validate through the schema checks
        DemoFile::from_json(&serde_json::to_string(f).expect("demo file serializes"))
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
    }
    let finalize = q.finalize.unwrap_or(true);
    mutate(hosted, move |s| {
        match body {
            DemoBody::File(f) => s.submit_demo_file(&f)?,
            DemoBody::One(d) => {
                let skill = s
                    .pending_skill()
                    .ok_or_else(|| SessionError::BadState(format!("no skill is being taught ({})", s.state().name())))?
                    .to_string();
                s.submit_demo(Demonstration { skill, objects: d.object_poses, keyframes: d.keyframes })?
            }
        };
        if finalize {
            s.finalize_skill()?;
        }
        Ok(())
    })
    .await
}

async fn finalize(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    mutate(hosted, |s| s.finalize_skill()).await
}

async fn abort(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    mutate(hosted, |s| match s.pending_skill() {
        Some(skill) => {
            let reason = SessionError::DemoSourceUnavailable(skill.to_string());
            s.abort_teaching(reason);
            Ok(())
        }
        None => Err(SessionError::BadState(format!("no skill is being taught ({})", s.state().name()))),
    })
    .await
}

async fn session_state(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let hosted = app.get(&id)?;
    let s = hosted.session.lock().await;
    let mut v = s.state_json();
    v["id"] = json!(id);
    Ok(Json(v))
}

struct Tail {
    hosted: Arc<Hosted>,
    next: usize,
    rx: watch::Receiver<usize>,
    buffer: VecDeque<(usize, SessionEvent)>,
}

fn frame(seq: usize, e: &SessionEvent) -> Event {
    let kind = crate::run::kind_name(e.kind);
    Event::default().id(seq.to_string()).event(kind).data(serde_json::to_string(e).expect("events serialize"))
}

fn tail(hosted: Arc<Hosted>, from: usize) -> impl Stream<Item = Result<Event, Infallible>> {
    let rx = hosted.published.subscribe();
    let start = Tail { hosted, next: from, rx, buffer: VecDeque::new() };
    stream::unfold(start, |mut t| async move {
        loop {
            if let Some((seq, e)) = t.buffer.pop_front() {
                return Some((Ok(frame(seq, &e)), t));
            }
            {
                let log = t.hosted.log.lock().expect("log lock");
                for (i, e) in log.iter().enumerate().skip(t.next) {
                    t.buffer.push_back((i, e.clone()));
                }
                t.next = t.next.max(log.len());
            }
            if t.buffer.is_empty() && t.rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let hosted = app.get(&id)?;
    if let Some(since) = q.since {
        let log = hosted.log.lock().expect("log lock");
        let events: Vec<&SessionEvent> = log.iter().skip(since).collect();
        return Ok(Json(json!({"since": since, "next": log.len(), "events": events})).into_response());
    }
    let from = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<usize>().ok())
        .map_or(0, |n| n + 1);
    Ok(Sse::new(tail(hosted, from)).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", axum::routing::delete(remove))
        .route("/sessions/{id}/task", post(task))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/demo", post(demo))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/abort", post(abort))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let defaults = Defaults::from_args(args)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Config(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener =
            tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::Config(format!("{addr}: {e}")))?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(|e| CliError::Config(e.to_string()))?);
        axum::serve(listener, router(AppState::new(defaults)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Failed(e.to_string()))
    })
}
