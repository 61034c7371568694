//! Local HTTP API over a run's MWLB items and its record log.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use anyhow::{bail, Context, Result};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use mipw_core::{consensus, FieldError, MetaphorSpan, QualitativeRecord, UnitAnnotation};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{oneshot, Mutex};

use crate::records::{latest_per_key, RecordLog, RecordLogEntry};
use crate::run::{self, read_items, read_manifest, Gold, ItemStatus};

#[derive(Debug, Clone, Serialize)]
pub struct AnnotationItem {
    pub sentence_id: String,
    pub model_id: String,
    pub sentence: String,
    pub lj_metaphors: Vec<MetaphorSpan>,
    pub units: Vec<UnitAnnotation>,
    pub raw_response: Option<String>,
    pub status: ItemStatus,
    /// Annotators with at least one record for this item.
    pub annotated_by: Vec<String>,
}

struct AppState {
    items: Vec<AnnotationItem>,
    index: HashMap<String, usize>,
    model_id: String,
    writer: Mutex<RecordLog>,
    snapshot: RwLock<Arc<Vec<RecordLogEntry>>>,
}

impl AppState {
    fn entries(&self) -> Arc<Vec<RecordLogEntry>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn view(&self, item: &AnnotationItem, entries: &[RecordLogEntry]) -> AnnotationItem {
        let annotators: BTreeSet<&str> = entries
            .iter()
            .filter(|e| e.record.sentence_id == item.sentence_id && e.record.model_id == item.model_id)
            .map(|e| e.record.annotator_id.as_str())
            .collect();
        AnnotationItem {
            annotated_by: annotators.into_iter().map(String::from).collect(),
            ..item.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub run_dir: PathBuf,
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await??;
        Ok(())
    }
}

fn load_items(run_dir: &std::path::Path) -> Result<(String, Vec<AnnotationItem>)> {
    let manifest = read_manifest(run_dir)?;
    if manifest.corpus.format != "mwlb" {
        bail!(
            "run {} holds {} outputs; serving needs an MWLB run",
            run_dir.display(),
            manifest.corpus.format
        );
    }
    let model = manifest.model.model_id.clone();
    let items = read_items(run_dir)?
        .into_iter()
        .map(|it| {
            let lj_metaphors = match it.gold {
                Gold::Mwlb { lj_metaphors, .. } => lj_metaphors,
                Gold::Trofi { .. } => Vec::new(),
            };
            AnnotationItem {
                sentence_id: it.id,
                model_id: model.clone(),
                sentence: it.sentence,
                lj_metaphors,
                units: it.parsed.map(|p| p.units).unwrap_or_default(),
                raw_response: it.response,
                status: it.status,
                annotated_by: Vec::new(),
            }
        })
        .collect();
    Ok((model, items))
}

pub fn router(run_dir: &std::path::Path, static_dir: Option<PathBuf>) -> Result<Router> {
    let (model_id, items) = load_items(run_dir)?;
    let (log, tail) = RecordLog::open(&run_dir.join(run::RECORD_LOG))
        .with_context(|| format!("opening record log in {}", run_dir.display()))?;
    if let Some(t) = tail {
        log::warn!("record log had a torn final entry ({} bytes at offset {}); truncated", t.len, t.offset);
    }
    let index = items.iter().enumerate().map(|(i, it)| (it.sentence_id.clone(), i)).collect();
    let state = Arc::new(AppState {
        items,
        index,
        model_id,
        snapshot: RwLock::new(Arc::new(log.entries().to_vec())),
        writer: Mutex::new(log),
    });
    let api = Router::new()
        .route("/api/items", get(list_items))
        .route("/api/items/{id}", get(get_item))
        .route("/api/items/{id}/records", axum::routing::post(post_record))
        .route("/api/export", get(export))
        .route("/api/conflicts", get(conflicts))
        .with_state(state);
    Ok(match static_dir {
        Some(dir) => {
            let dir = Arc::new(dir);
            api.fallback(move |uri: axum::http::Uri| static_file(dir.clone(), uri))
        }
        None => api.route("/", get(placeholder)),
    })
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Files under `dir`; `/` and unknown extensionless paths fall back to
/// index.html so client-side routes work.
async fn static_file(dir: Arc<PathBuf>, uri: axum::http::Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    if rel.split('/').any(|seg| seg == ".." || seg.contains('\\')) {
        return StatusCode::BAD_REQUEST.into_response();
    }
    let mut path = dir.join(rel);
    if rel.is_empty() || (!path.is_file() && path.extension().is_none()) {
        path = dir.join("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(axum::http::header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

pub async fn start(opts: ServeOptions) -> Result<ServerHandle> {
    if !opts.addr.ip().is_loopback() {
        log::warn!("binding {}: the API has no authentication", opts.addr);
    }
    let app = router(&opts.run_dir, opts.static_dir.clone())?;
    let listener = tokio::net::TcpListener::bind(opts.addr)
        .await
        .with_context(|| format!("cannot bind {}", opts.addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        task,
    })
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>mipw</title><p>Annotation API is running. \
         Endpoints: /api/items, /api/items/{id}, /api/items/{id}/records, /api/export, /api/conflicts. \
         Start with <code>--static DIR</code> to serve the UI bundle.</p>",
    )
}

async fn list_items(State(state): State<Arc<AppState>>) -> Json<Vec<AnnotationItem>> {
    let entries = state.entries();
    Json(state.items.iter().map(|it| state.view(it, &entries)).collect())
}

fn not_found(id: &str) -> Response {
    (StatusCode::NOT_FOUND, Json(json!({"error": format!("no item `{id}`")}))).into_response()
}

async fn get_item(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(&i) = state.index.get(&id) else {
        return not_found(&id);
    };
    let entries = state.entries();
    let item = state.view(&state.items[i], &entries);
    let records: Vec<QualitativeRecord> = latest_per_key(&entries)
        .into_iter()
        .filter(|r| r.sentence_id == id && r.model_id == item.model_id)
        .collect();
    Json(json!({"item": item, "records": records})).into_response()
}

/// Identity fields may be left out of the body; they default to the item.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordBody {
    #[serde(default)]
    sentence_id: Option<String>,
    #[serde(default)]
    model_id: Option<String>,
    annotator_id: String,
    lj_identified: bool,
    lj_basic_correct: bool,
    additional: bool,
    #[serde(default)]
    additional_metaphorical: Option<bool>,
    #[serde(default)]
    additional_basic_correct: Option<bool>,
    #[serde(default)]
    note: Option<String>,
}

fn unprocessable(errors: Vec<FieldError>) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "errors": errors }))).into_response()
}

fn serde_field_error(e: &serde_json::Error) -> FieldError {
    let msg = e.to_string();
    let field = msg.split('`').nth(1).unwrap_or("body").to_string();
    FieldError { field, message: msg }
}

async fn post_record(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, Json(body): Json<Value>) -> Response {
    let Some(&i) = state.index.get(&id) else {
        return not_found(&id);
    };
    let body: RecordBody = match serde_json::from_value(body) {
        Ok(b) => b,
        Err(e) => return unprocessable(vec![serde_field_error(&e)]),
    };
    let item = &state.items[i];
    let mut errors = Vec::new();
    if body.sentence_id.as_deref().is_some_and(|s| s != item.sentence_id) {
        errors.push(FieldError {
            field: "sentence_id".into(),
            message: format!("does not match item `{}`", item.sentence_id),
        });
    }
    if body.model_id.as_deref().is_some_and(|m| m != state.model_id) {
        errors.push(FieldError {
            field: "model_id".into(),
            message: format!("this run serves model `{}`", state.model_id),
        });
    }
    let record = QualitativeRecord {
        sentence_id: item.sentence_id.clone(),
        model_id: state.model_id.clone(),
        annotator_id: body.annotator_id,
        lj_identified: body.lj_identified,
        lj_basic_correct: body.lj_basic_correct,
        additional: body.additional,
        additional_metaphorical: body.additional_metaphorical,
        additional_basic_correct: body.additional_basic_correct,
        note: body.note.filter(|n| !n.is_empty()),
    };
    if let Err(mut e) = record.validate() {
        errors.append(&mut e);
    }
    if !errors.is_empty() {
        return unprocessable(errors);
    }

    let mut writer = state.writer.lock().await;
    match writer.append(record) {
        Ok(entry) => {
            *state.snapshot.write().expect("snapshot lock") = Arc::new(writer.entries().to_vec());
            (StatusCode::CREATED, Json(entry)).into_response()
        }
        Err(e) => {
            log::error!("append failed: {e}");
            (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response()
        }
    }
}

async fn export(State(state): State<Arc<AppState>>) -> Json<Vec<QualitativeRecord>> {
    Json(latest_per_key(&state.entries()))
}

async fn conflicts(State(state): State<Arc<AppState>>) -> Json<Vec<mipw_core::Conflict>> {
    Json(consensus(&latest_per_key(&state.entries())).conflicts)
}
