//! HTTP/JSON service under `/api`. Reads share the store; every mutation
//! takes the single write lock. Training and batch generation run as
//! background jobs polled through `/api/jobs/{id}`.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use formscape_core::explore::{find_transitions, CrossSection, TransitionSet};
use formscape_core::morphogen::Image;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::analysis::{EmbeddingRequest, GridRequest};
use crate::generate::GenerateRequest;
use crate::record::PhenotypeRecord;
use crate::split::DEFAULT_SPLIT_RATIO;
use crate::store::{ingest_all, ErrorKind, RecordFilter, Store, StoreError};
use crate::training::{run_training, PredictInput, TrainRequest};

pub const PGM_MIME: &str = "image/x-portable-graymap";
pub const PNG_MIME: &str = "image/png";

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e.kind() {
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Train,
    Generate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: u64,
    pub kind: JobKind,
    pub status: JobStatus,
    pub created: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
    pub result: Option<Value>,
    pub error: Option<String>,
}

struct Section {
    cross_section: CrossSection,
    label_names: Vec<String>,
}

struct Shared {
    store: RwLock<Store>,
    jobs: Mutex<BTreeMap<u64, Job>>,
    sections: Mutex<Vec<Section>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(store: Store) -> Self {
        Self(Arc::new(Shared {
            store: RwLock::new(store),
            jobs: Mutex::new(BTreeMap::new()),
            sections: Mutex::new(Vec::new()),
        }))
    }

    fn with_read<T>(
        &self,
        f: impl FnOnce(&Store) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        f(&self.0.store.read().expect("store lock poisoned"))
    }

    fn with_write<T>(
        &self,
        f: impl FnOnce(&mut Store) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        f(&mut self.0.store.write().expect("store lock poisoned"))
    }

    fn start_job(&self, kind: JobKind) -> u64 {
        let mut jobs = self.0.jobs.lock().expect("job table poisoned");
        let id = jobs.keys().next_back().map_or(1, |k| k + 1);
        let job = Job {
            id,
            kind,
            status: JobStatus::Running,
            created: Utc::now(),
            finished: None,
            result: None,
            error: None,
        };
        jobs.insert(id, job);
        id
    }

    fn finish_job(&self, id: u64, outcome: Result<Value, StoreError>) {
        let mut jobs = self.0.jobs.lock().expect("job table poisoned");
        let job = jobs.get_mut(&id).expect("job was registered");
        job.finished = Some(Utc::now());
        match outcome {
            Ok(v) => {
                job.status = JobStatus::Succeeded;
                job.result = Some(v);
            }
            Err(e) => {
                job.status = JobStatus::Failed;
                job.error = Some(e.to_string());
            }
        }
    }
}

/// Runs blocking store work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/records", get(list_records))
        .route("/records/{id}", get(get_record))
        .route("/records/{id}/image", get(get_image))
        .route("/records/{id}/judgement", post(post_judgement))
        .route("/taxonomy", get(get_taxonomy))
        .route("/split", post(post_split))
        .route("/generate", post(post_generate))
        .route("/train", post(post_train))
        .route("/jobs/{id}", get(get_job))
        .route("/models", get(list_models))
        .route("/models/{id}/metrics", get(get_metrics))
        .route("/predict", post(post_predict))
        .route("/embedding", get(get_embedding))
        .route("/cross-section", post(post_cross_section))
        .route("/transitions", get(get_transitions))
        .route("/pseudo-label", post(post_pseudo_label));
    Router::new().nest("/api", api).with_state(state)
}

/// Serves until ctrl-c. Dropping the state afterwards releases the store lock.
pub async fn serve(state: AppState, listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn list_records(
    State(s): State<AppState>,
    Query(filter): Query<RecordFilter>,
) -> ApiResult<Json<Vec<PhenotypeRecord>>> {
    let records =
        blocking(move || s.with_read(|st| Ok(st.query(&filter).into_iter().cloned().collect())))
            .await?;
    Ok(Json(records))
}

async fn get_record(
    State(s): State<AppState>,
    Path(id): Path<u64>,
) -> ApiResult<Json<PhenotypeRecord>> {
    Ok(Json(
        blocking(move || s.with_read(|st| st.record(id).cloned())).await?,
    ))
}

fn png_bytes(img: &Image) -> Result<Vec<u8>, String> {
    let gray = image::GrayImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.pixels().to_vec(),
    )
    .ok_or("image buffer size mismatch")?;
    let mut out = Cursor::new(Vec::new());
    gray.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(out.into_inner())
}

/// PGM when the Accept header asks for it, PNG otherwise.
async fn get_image(
    State(s): State<AppState>,
    Path(id): Path<u64>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let wants_pgm = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains(PGM_MIME));
    let img = blocking(move || s.with_read(|st| st.image(id))).await?;
    if wants_pgm {
        return Ok(([(header::CONTENT_TYPE, PGM_MIME)], img.to_pgm()).into_response());
    }
    let bytes = png_bytes(&img).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?;
    Ok(([(header::CONTENT_TYPE, PNG_MIME)], bytes).into_response())
}

#[derive(Debug, Deserialize)]
struct JudgementBody {
    rank: Option<i64>,
    category: Option<String>,
}

async fn post_judgement(
    State(s): State<AppState>,
    Path(id): Path<u64>,
    Json(body): Json<JudgementBody>,
) -> ApiResult<Json<PhenotypeRecord>> {
    let r = blocking(move || {
        s.with_write(|st| st.submit_judgement(id, body.rank, body.category.as_deref()))
    })
    .await?;
    Ok(Json(r))
}

async fn get_taxonomy(State(s): State<AppState>) -> ApiResult<Json<Vec<String>>> {
    Ok(Json(
        blocking(move || s.with_read(|st| Ok(st.taxonomy().names().to_vec()))).await?,
    ))
}

#[derive(Debug, Deserialize)]
struct SplitBody {
    #[serde(default)]
    ratio: Option<f64>,
    #[serde(default)]
    seed: u64,
}

async fn post_split(
    State(s): State<AppState>,
    Json(body): Json<SplitBody>,
) -> ApiResult<Json<Value>> {
    let ratio = body.ratio.unwrap_or(DEFAULT_SPLIT_RATIO);
    let split =
        blocking(move || s.with_write(|st| st.split_dataset(ratio, body.seed).cloned())).await?;
    Ok(Json(json!({
        "ratio": split.ratio,
        "seed": split.seed,
        "train": split.train.len(),
        "validation": split.validation.len(),
        "warnings": split.warnings,
    })))
}

fn accepted(job_id: u64) -> (StatusCode, Json<Value>) {
    (
        StatusCode::ACCEPTED,
        Json(json!({ "job_id": job_id, "status": JobStatus::Running })),
    )
}

/// Validates and plans under the read lock, grows forms with no lock held,
/// then commits under the write lock.
async fn post_generate(
    State(s): State<AppState>,
    Json(req): Json<GenerateRequest>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let st = s.clone();
    let plan = blocking(move || st.with_read(|store| store.plan_generation(&req))).await?;
    let id = s.start_job(JobKind::Generate);
    tokio::task::spawn_blocking(move || {
        let ingested = ingest_all(&plan.items);
        let outcome = s.with_write(|st| st.commit(ingested)).map(|records| {
            json!({
                "ids": records.iter().map(|r| r.id).collect::<Vec<_>>(),
                "warning": plan.warning,
            })
        });
        s.finish_job(id, outcome);
    });
    Ok(accepted(id))
}

/// Assembles the dataset under the read lock, trains with no lock held and
/// stores the model under the write lock.
async fn post_train(
    State(s): State<AppState>,
    Json(req): Json<TrainRequest>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let st = s.clone();
    let set = blocking(move || st.with_read(|store| store.training_set(&req))).await?;
    let id = s.start_job(JobKind::Train);
    tokio::task::spawn_blocking(move || {
        let outcome = run_training(set)
            .and_then(|trained| s.with_write(|st| st.save_model(trained)))
            .and_then(|info| Ok(serde_json::to_value(info)?));
        s.finish_job(id, outcome);
    });
    Ok(accepted(id))
}

async fn get_job(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Job>> {
    let jobs = s.0.jobs.lock().expect("job table poisoned");
    jobs.get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown job {id}")))
}

async fn list_models(State(s): State<AppState>) -> ApiResult<Json<Value>> {
    let models = blocking(move || {
        s.with_read(|st| Ok(serde_json::to_value(st.models().collect::<Vec<_>>())?))
    })
    .await?;
    Ok(Json(models))
}

async fn get_metrics(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let info = blocking(move || s.with_read(|st| Ok(st.model(id)?.0.clone()))).await?;
    Ok(Json(json!({
        "model_id": info.id,
        "metrics": info.metrics,
        "knn_k": info.knn_k,
        "knn_metrics": info.knn_metrics,
    })))
}

#[derive(Debug, Deserialize)]
struct PredictBody {
    model_id: u64,
    #[serde(default)]
    genotype: Option<Vec<f64>>,
    #[serde(default)]
    record_id: Option<u64>,
    /// Growth seed when a feature-space model is given a genotype.
    #[serde(default)]
    seed: u64,
}

async fn post_predict(
    State(s): State<AppState>,
    Json(body): Json<PredictBody>,
) -> ApiResult<Json<Value>> {
    let input = match (body.genotype, body.record_id) {
        (Some(u), None) => PredictInput::Genotype(u),
        (None, Some(id)) => PredictInput::Record(id),
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "give exactly one of genotype and record_id",
            ))
        }
    };
    let report =
        blocking(move || s.with_read(|st| st.predict(body.model_id, &input, body.seed))).await?;
    Ok(Json(serde_json::to_value(report).expect("plain data")))
}

async fn get_embedding(
    State(s): State<AppState>,
    Query(req): Query<EmbeddingRequest>,
) -> ApiResult<Json<Value>> {
    let e = blocking(move || s.with_read(|st| st.embedding(&req))).await?;
    Ok(Json(serde_json::to_value(e).expect("plain data")))
}

#[derive(Debug, Deserialize)]
struct CrossSectionBody {
    model_id: u64,
    #[serde(flatten)]
    grid: GridRequest,
}

async fn post_cross_section(
    State(s): State<AppState>,
    Json(body): Json<CrossSectionBody>,
) -> ApiResult<Json<Value>> {
    let st = s.clone();
    let (cs, labels) =
        blocking(move || st.with_read(|store| store.cross_section(body.model_id, &body.grid)))
            .await?;
    let mut response = json!({ "label_names": labels, "cross_section": cs });
    let mut sections = s.0.sections.lock().expect("section table poisoned");
    sections.push(Section {
        cross_section: cs,
        label_names: labels,
    });
    response["id"] = json!(sections.len());
    Ok(Json(response))
}

#[derive(Debug, Deserialize)]
struct TransitionsQuery {
    cross_section_id: usize,
}

#[derive(Debug, Serialize)]
struct TransitionsResponse {
    cross_section_id: usize,
    label_names: Vec<String>,
    #[serde(flatten)]
    transitions: TransitionSet,
}

async fn get_transitions(
    State(s): State<AppState>,
    Query(q): Query<TransitionsQuery>,
) -> ApiResult<Json<TransitionsResponse>> {
    let sections = s.0.sections.lock().expect("section table poisoned");
    let section = q
        .cross_section_id
        .checked_sub(1)
        .and_then(|i| sections.get(i))
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                format!("unknown cross-section {}", q.cross_section_id),
            )
        })?;
    Ok(Json(TransitionsResponse {
        cross_section_id: q.cross_section_id,
        label_names: section.label_names.clone(),
        transitions: find_transitions(&section.cross_section),
    }))
}

#[derive(Debug, Deserialize)]
struct PseudoBody {
    model_id: u64,
    tau: f64,
    #[serde(default)]
    apply: bool,
}

async fn post_pseudo_label(
    State(s): State<AppState>,
    Json(body): Json<PseudoBody>,
) -> ApiResult<Json<Value>> {
    let st = s.clone();
    let mut report =
        blocking(move || st.with_read(|store| store.propose_labels(body.model_id, body.tau)))
            .await?;
    if body.apply {
        report =
            blocking(move || s.with_write(|store| store.apply_labels(&mut report).map(|_| report)))
                .await?;
    }
    Ok(Json(serde_json::to_value(report).expect("plain data")))
}
