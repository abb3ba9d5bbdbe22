//! HTTP + JSON front end: datasets, steering sessions, and asynchronous simulation jobs.
//!
//! Layout coordinates on the wire are always unit-square values. Each session has a single
//! writer: while an interaction or reset is running, further writes get `409 Conflict` and
//! reads keep answering from the last committed state.

mod error;
mod state;

use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sidr::io::{read_features, read_labels};
use sidr::sim::{generate_synthetic_benchmark, run_simulation_with_progress, BenchmarkConfig, SimConfig};
use sidr::{InteractionSpec, LabelMap, Layout2D, Session, SessionConfig};

pub use error::{ApiError, ApiResult};
pub use state::{read_thumbnails, AppState, Dataset, Job, JobStatus, SessionSlot, Thumbnail, WriteGuard};

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(dataset_info))
        .route("/datasets/{id}/thumbnails/{item}", get(thumbnail))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/layout", get(layout))
        .route("/sessions/{id}/interactions", post(submit_interaction))
        .route("/sessions/{id}/reset", post(reset_session))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/score", get(score))
        .route("/sessions/{id}/head", get(head_checkpoint))
        .route("/simulations", post(start_simulation))
        .route("/simulations/{id}", get(poll_simulation))
        .layer(DefaultBodyLimit::max(256 << 20))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PointJson {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

pub fn layout_json(layout: &Layout2D) -> Vec<PointJson> {
    layout
        .points()
        .map(|(id, [x, y])| PointJson { id: id.as_str().to_owned(), x, y })
        .collect()
}

fn layout_body(session: &Session) -> Value {
    json!({ "layout": layout_json(session.layout()), "version": session.version() })
}

async fn upload_dataset(State(st): Shared, mut form: Multipart) -> ApiResult<impl IntoResponse> {
    let mut features_csv = None;
    let mut label_csvs = Vec::new();
    let mut thumbs = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("multipart: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(format!("multipart field {name}: {e}")))?;
        match name.as_str() {
            "features" => features_csv = Some(data),
            "thumbnails" => thumbs = Some(data),
            "labels" => label_csvs.push(("labels".to_owned(), data)),
            other => match other.strip_prefix("labels.") {
                Some(set) if !set.is_empty() => label_csvs.push((set.to_owned(), data)),
                _ => return Err(ApiError::bad_request(format!("unexpected field {other:?}"))),
            },
        }
    }
    let features_csv = features_csv.ok_or_else(|| ApiError::bad_request("missing `features` field"))?;
    let features = read_features(&features_csv[..])?;
    let mut labels = BTreeMap::new();
    for (set, csv) in label_csvs {
        let map = read_labels(&csv[..], &features).map_err(|e| {
            let mut err = ApiError::from(e);
            err.message = format!("label set {set:?}: {}", err.message);
            err
        })?;
        labels.insert(set, map);
    }
    let thumbnails = match thumbs {
        Some(bytes) => read_thumbnails(&bytes, &features)
            .map_err(|e| ApiError::bad_request(format!("thumbnail archive: {e}")))?,
        None => Default::default(),
    };
    let id = st.fresh_id("ds");
    let body = json!({
        "dataset_id": id,
        "n": features.n(),
        "d": features.d(),
        "label_sets": labels.keys().collect::<Vec<_>>(),
        "thumbnails": thumbnails.len(),
    });
    let ds = Dataset { features: Arc::new(features), labels, thumbnails };
    st.datasets.write().unwrap().insert(id, Arc::new(ds));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn dataset_info(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let ds = st.dataset(&id).ok_or_else(|| ApiError::not_found("dataset", &id))?;
    let mut thumbs: Vec<&String> = ds.thumbnails.keys().collect();
    thumbs.sort();
    Ok(Json(json!({
        "dataset_id": id,
        "n": ds.features.n(),
        "d": ds.features.d(),
        "ids": ds.features.ids(),
        "label_sets": ds.labels.keys().collect::<Vec<_>>(),
        "thumbnails": thumbs,
    })))
}

async fn thumbnail(
    State(st): Shared,
    Path((id, item)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let ds = st.dataset(&id).ok_or_else(|| ApiError::not_found("dataset", &id))?;
    let t = ds.thumbnails.get(&item).ok_or_else(|| ApiError::not_found("thumbnail", &item))?;
    Ok(([(header::CONTENT_TYPE, t.content_type)], t.bytes.clone()))
}

#[derive(Deserialize)]
struct CreateSession {
    dataset_id: String,
    #[serde(default)]
    config: Option<SessionConfig>,
}

async fn create_session(State(st): Shared, Json(req): Json<CreateSession>) -> ApiResult<impl IntoResponse> {
    let ds = st
        .dataset(&req.dataset_id)
        .ok_or_else(|| ApiError::not_found("dataset", &req.dataset_id))?;
    let cfg = req.config.unwrap_or(st.session_defaults);
    let session = tokio::task::spawn_blocking(move || Session::new(ds.features.clone(), cfg))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let id = st.fresh_id("s");
    let mut body = layout_body(&session);
    body["session_id"] = json!(id);
    st.sessions
        .write()
        .unwrap()
        .insert(id, Arc::new(SessionSlot::new(req.dataset_id, session)));
    Ok((StatusCode::CREATED, Json(body)))
}

fn slot(st: &AppState, id: &str) -> ApiResult<Arc<SessionSlot>> {
    st.session(id).ok_or_else(|| ApiError::not_found("session", id))
}

async fn layout(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let slot = slot(&st, &id)?;
    Ok(Json(slot.read(|s| {
        let mut body = layout_body(s);
        body["busy"] = json!(slot.is_busy());
        body
    })))
}

async fn submit_interaction(
    State(st): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let slot = slot(&st, &id)?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let spec = InteractionSpec::from_json(text)?;
    let guard = slot.try_begin()?;
    let mut session = guard.snapshot();
    let checkpoint = st.checkpoint_path(&id);
    let session = tokio::task::spawn_blocking(move || -> sidr::Result<Session> {
        session.submit(&spec)?;
        if let Some(path) = checkpoint {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| sidr::Error::Io { path: dir.into(), source: e })?;
            }
            session.head().save(&path)?;
        }
        Ok(session)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let body = layout_body(&session);
    guard.commit(session);
    Ok(Json(body))
}

async fn reset_session(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let slot = slot(&st, &id)?;
    let guard = slot.try_begin()?;
    let mut session = guard.snapshot();
    session.reset();
    let body = layout_body(&session);
    guard.commit(session);
    Ok(Json(body))
}

async fn history(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let slot = slot(&st, &id)?;
    Ok(Json(slot.read(|s| json!({ "versions": s.history() }))))
}

#[derive(Deserialize)]
struct ScoreQuery {
    labels: Option<String>,
}

fn pick_labels<'a>(labels: &'a BTreeMap<String, LabelMap>, name: Option<&str>) -> ApiResult<&'a LabelMap> {
    match name {
        Some(n) => labels.get(n).ok_or_else(|| ApiError::not_found("label set", n)),
        None if labels.len() == 1 => Ok(labels.values().next().unwrap()),
        None if labels.is_empty() => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "dataset has no labels to score against",
        )),
        None => Err(ApiError::bad_request(format!(
            "several label sets; choose one with ?labels= ({})",
            labels.keys().cloned().collect::<Vec<_>>().join(", ")
        ))),
    }
}

async fn score(
    State(st): Shared,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> ApiResult<Json<Value>> {
    let slot = slot(&st, &id)?;
    let ds = st
        .dataset(&slot.dataset_id)
        .ok_or_else(|| ApiError::not_found("dataset", &slot.dataset_id))?;
    let labels = pick_labels(&ds.labels, q.labels.as_deref())?;
    let (score, version) = slot.read(|s| (s.score(labels), s.version()));
    let mut body = serde_json::to_value(score?).expect("score serializes");
    body["version"] = json!(version);
    Ok(Json(body))
}

async fn head_checkpoint(State(st): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let slot = slot(&st, &id)?;
    let text = slot.read(|s| s.head().to_json());
    Ok(([(header::CONTENT_TYPE, "application/json")], text))
}

/// A sweep configuration, plus where its data comes from: an uploaded dataset and one of
/// its label sets, or (by default) the synthetic benchmark scored on its secondary factor.
#[derive(Debug, Deserialize)]
struct SimulationRequest {
    dataset_id: Option<String>,
    labels: Option<String>,
    benchmark: Option<BenchmarkConfig>,
    #[serde(flatten)]
    config: SimConfig,
}

async fn start_simulation(State(st): Shared, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: SimulationRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("simulation config: {e}")))?;
    let (features, labels) = match &req.dataset_id {
        Some(id) => {
            let ds = st.dataset(id).ok_or_else(|| ApiError::not_found("dataset", id))?;
            let labels = pick_labels(&ds.labels, req.labels.as_deref())?.clone();
            (ds.features.clone(), labels)
        }
        None => {
            let b = generate_synthetic_benchmark(&req.benchmark.unwrap_or_default())?;
            (Arc::new(b.features), b.secondary)
        }
    };
    req.config.validate(&labels)?;
    let id = st.fresh_id("job");
    let job = Arc::new(Job {
        done: Default::default(),
        total: Default::default(),
        status: Mutex::new(JobStatus::Running),
    });
    st.jobs.write().unwrap().insert(id.clone(), job.clone());
    let cfg = req.config;
    tokio::task::spawn_blocking(move || {
        let progress = |done: usize, total: usize| {
            job.total.store(total, Ordering::Relaxed);
            job.done.fetch_max(done, Ordering::Relaxed);
        };
        let outcome = run_simulation_with_progress(&features, &labels, &cfg, &progress);
        *job.status.lock().unwrap() = match outcome {
            Ok(report) => JobStatus::Done(Box::new(report)),
            Err(e) => JobStatus::Failed(e.to_string()),
        };
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))))
}

async fn poll_simulation(State(st): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let job = st.job(&id).ok_or_else(|| ApiError::not_found("simulation job", &id))?;
    let (done, total) = (job.done.load(Ordering::Relaxed), job.total.load(Ordering::Relaxed));
    let body = match &*job.status.lock().unwrap() {
        JobStatus::Running => json!({ "status": "running", "done": done, "total": total }),
        JobStatus::Done(report) => json!({ "status": "done", "done": done, "total": total, "report": report }),
        JobStatus::Failed(e) => json!({ "status": "failed", "error": e }),
    };
    Ok(Json(body))
}
