//! Upload-and-view HTTP service for graph documents.
//!
//! Writes need the static bearer token; reads are open. Each upload gets a
//! random 22-character id and is never modified afterwards.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, Method, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use chrono::{DateTime, Utc};
use log::{info, warn};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::graph_io::{self, Format, GraphIoError};

pub const MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;
const ID_LEN: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedGraph {
    pub id: String,
    pub filename: String,
    pub size: u64,
    pub uploaded_at: DateTime<Utc>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub id: String,
    pub view_url: String,
}

#[derive(Debug, Clone)]
pub struct ShareOptions {
    pub data_dir: PathBuf,
    pub token: String,
    pub max_upload_bytes: usize,
    /// Static viewer assets served under `/viewer/`, if built.
    pub viewer_dir: Option<PathBuf>,
}

impl ShareOptions {
    pub fn new(data_dir: impl Into<PathBuf>, token: impl Into<String>) -> Self {
        Self { data_dir: data_dir.into(), token: token.into(), max_upload_bytes: MAX_UPLOAD_BYTES, viewer_dir: None }
    }
}

struct AppState {
    dir: PathBuf,
    token: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    col: Option<usize>,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error, message: message.into(), line: None, col: None } }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("no graph with id {id:?}"))
    }

    fn internal(err: impl std::fmt::Display) -> Self {
        warn!("share storage error: {err}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageIO", err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<GraphIoError> for ApiError {
    fn from(err: GraphIoError) -> Self {
        let mut e = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "ParseError", err.to_string());
        match err {
            GraphIoError::ParseError { line, col, .. } => {
                e.body.line = Some(line);
                e.body.col = Some(col);
            }
            GraphIoError::UnsupportedVersion(_) => e.body.error = "UnsupportedVersion",
            GraphIoError::DuplicateNodeId(_) => e.body.error = "DuplicateNodeId",
            GraphIoError::UnknownFormat(_) => e.body.error = "UnknownFormat",
            GraphIoError::Io { .. } => return ApiError::internal(e.body.message),
        }
        e
    }
}

pub fn new_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

fn valid_id(id: &str) -> bool {
    id.len() == ID_LEN && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn data_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.graph"))
}

fn meta_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.meta.json"))
}

pub fn router(options: ShareOptions) -> std::io::Result<Router> {
    std::fs::create_dir_all(&options.data_dir)?;
    let state = Arc::new(AppState { dir: options.data_dir, token: options.token });
    let cors = CorsLayer::new().allow_methods([Method::GET]).allow_origin(Any);
    let mut reads = Router::new()
        .route("/graphs/{id}", get(get_graph))
        .route("/graphs/{id}/meta", get(get_meta))
        .route("/view/{id}", get(view));
    if let Some(dir) = options.viewer_dir {
        reads = reads.nest_service("/viewer", ServeDir::new(dir));
    }
    let writes = Router::new()
        .route("/graphs", post(upload))
        .layer(DefaultBodyLimit::max(options.max_upload_bytes));
    Ok(reads.layer(cors).merge(writes).with_state(state))
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    options: ShareOptions,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(options)?;
    info!("share service listening on {}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

#[derive(Deserialize)]
struct UploadQuery {
    filename: Option<String>,
}

fn authorized(headers: &HeaderMap, token: &str) -> bool {
    let Some(value) = headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()) else { return false };
    let Some(given) = value.strip_prefix("Bearer ") else { return false };
    // Compare without an early exit on the first differing byte.
    given.len() == token.len() && given.bytes().zip(token.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

fn upload_filename(headers: &HeaderMap, query: UploadQuery) -> Option<String> {
    query.filename.or_else(|| headers.get("x-filename").and_then(|v| v.to_str().ok()).map(str::to_string)).map(|name| {
        // Keep only the final path component.
        name.rsplit(['/', '\\']).next().unwrap_or_default().to_string()
    })
}

async fn upload(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(query): Query<UploadQuery>,
    body: Bytes,
) -> Result<(StatusCode, Json<UploadResponse>), ApiError> {
    if state.token.is_empty() || !authorized(&headers, &state.token) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or invalid bearer token"));
    }
    let filename = upload_filename(&headers, query);
    let format = match filename.as_deref().map(|f| Format::from_path(Path::new(f))) {
        Some(Ok(f)) => f,
        _ => Format::sniff(&body),
    };
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "ParseError", format!("body is not UTF-8: {e}")))?;
    graph_io::from_str(text, format)?;

    let dir = state.dir.clone();
    let meta = tokio::task::spawn_blocking(move || store_upload(&dir, &body, filename, format))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    info!("stored graph {} ({} bytes, {:?})", meta.id, meta.size, meta.format);
    let view_url = format!("/view/{}", meta.id);
    Ok((StatusCode::CREATED, Json(UploadResponse { id: meta.id, view_url })))
}

/// Writes body and metadata under fresh temporary names and renames them
/// into place, metadata last; a graph is visible once its metadata exists.
fn store_upload(dir: &Path, body: &[u8], filename: Option<String>, format: Format) -> std::io::Result<SharedGraph> {
    use std::io::Write;
    loop {
        let id = new_id();
        if meta_path(dir, &id).exists() || data_path(dir, &id).exists() {
            continue;
        }
        let meta = SharedGraph {
            filename: filename.clone().unwrap_or_else(|| format!("{id}.{}", format.extension())),
            id,
            size: body.len() as u64,
            uploaded_at: Utc::now(),
            format,
        };
        let write_new = |path: &Path, bytes: &[u8]| -> std::io::Result<()> {
            let mut f = std::fs::OpenOptions::new().write(true).create_new(true).open(path)?;
            f.write_all(bytes)?;
            f.sync_all()
        };
        let tmp_data = dir.join(format!(".{}.graph.tmp", meta.id));
        let tmp_meta = dir.join(format!(".{}.meta.tmp", meta.id));
        write_new(&tmp_data, body)?;
        write_new(&tmp_meta, &serde_json::to_vec(&meta).expect("meta serializes"))?;
        std::fs::rename(&tmp_data, data_path(dir, &meta.id))?;
        std::fs::rename(&tmp_meta, meta_path(dir, &meta.id))?;
        return Ok(meta);
    }
}

async fn load_meta(dir: &Path, id: &str) -> Result<SharedGraph, ApiError> {
    if !valid_id(id) {
        return Err(ApiError::not_found(id));
    }
    match tokio::fs::read(meta_path(dir, id)).await {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(ApiError::internal),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ApiError::not_found(id)),
        Err(e) => Err(ApiError::internal(e)),
    }
}

fn content_type(format: Format) -> &'static str {
    match format {
        Format::Gexf => "application/gexf+xml",
        Format::Gml => "text/plain; charset=utf-8",
        Format::Json => "application/json",
    }
}

async fn get_graph(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let meta = load_meta(&state.dir, &id).await?;
    let bytes = tokio::fs::read(data_path(&state.dir, &id)).await.map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, content_type(meta.format))], bytes).into_response())
}

async fn get_meta(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SharedGraph>, ApiError> {
    load_meta(&state.dir, &id).await.map(Json)
}

async fn view(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Html<String>, ApiError> {
    let meta = load_meta(&state.dir, &id).await?;
    Ok(Html(viewer_page(&meta)))
}

fn viewer_page(meta: &SharedGraph) -> String {
    let name = meta.filename.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;");
    format!(
        r#"<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{name}</title>
<link rel="stylesheet" href="/viewer/viewer.css">
</head>
<body>
<div id="viewer" data-graph-url="/graphs/{id}" data-graph-format="{format}"></div>
<noscript><a href="/graphs/{id}">Download {name}</a></noscript>
<script type="module" src="/viewer/viewer.js"></script>
</body>
</html>
"#,
        id = meta.id,
        format = meta.format.extension(),
    )
}
