//! HTTP API: workspace discovery, sessions and layers, tiles and lookups.

use std::collections::HashMap;
use std::hash::Hash;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tileviz_core::geojson::parse_feature_collection;
use tileviz_core::graph::import_graph_json;
use tileviz_core::session::{
    render_composite_tile, render_layer_tile, tile_in_range, Layer, LayerSource, SessionError, TileError,
};
use tileviz_core::slide::{load_flat_overlay, SlideError};
use tileviz_core::workspace::{scan_workspace, OverlayEntry, SlideKind, WorkspaceCatalog};
use tileviz_core::{AnnotationStore, Graph, ProjectConfig, Session, SlidePyramid, TileCoord};

/// Layer id addressing the composite of every visible layer.
pub const COMPOSITE_LAYER_ID: &str = "composite";
pub const DEFAULT_SESSION_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), extra: None }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let (Some(Value::Object(extra)), Value::Object(obj)) = (self.extra, &mut body) {
            obj.extend(extra);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::UnknownLayer(_) => ApiError::not_found(msg),
            SessionError::LayerCombination(_) => ApiError::new(StatusCode::CONFLICT, "layer_combination", msg),
            SessionError::InvalidDelta { ref field, .. } => ApiError {
                extra: Some(json!({ "field": field })),
                ..ApiError::new(StatusCode::BAD_REQUEST, "invalid_params", msg)
            },
            SessionError::BaseLayer => ApiError::bad_request(msg),
            SessionError::Incompatible(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "incompatible_overlay", msg),
        }
    }
}

impl From<TileError> for ApiError {
    fn from(e: TileError) -> Self {
        ApiError::internal(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Loaded sources keyed by path and modification time, so a replaced file
/// is reloaded while unchanged files are shared between sessions.
type Stamped<K> = (K, Option<SystemTime>);

struct SnapshotCache<K, T> {
    entries: Mutex<HashMap<Stamped<K>, Arc<T>>>,
}

impl<K: Eq + Hash + Clone, T> SnapshotCache<K, T> {
    fn new() -> Self {
        SnapshotCache { entries: Mutex::new(HashMap::new()) }
    }

    fn get_or_load<E>(&self, key: K, path: &Path, load: impl FnOnce() -> Result<T, E>) -> Result<Arc<T>, E> {
        let mtime = std::fs::metadata(path).and_then(|m| m.modified()).ok();
        let k = (key, mtime);
        if let Some(v) = self.entries.lock().unwrap().get(&k) {
            return Ok(v.clone());
        }
        let v = Arc::new(load()?);
        self.entries.lock().unwrap().insert(k, v.clone());
        Ok(v)
    }
}

struct SessionSlot {
    slide_id: String,
    session: RwLock<Session>,
    last_used: Mutex<Instant>,
}

impl SessionSlot {
    fn touch(&self) {
        *self.last_used.lock().unwrap() = Instant::now();
    }
}

pub struct AppState {
    root: PathBuf,
    config: Arc<ProjectConfig>,
    session_timeout: Duration,
    sessions: Mutex<HashMap<String, Arc<SessionSlot>>>,
    slides: SnapshotCache<PathBuf, SlidePyramid>,
    stores: SnapshotCache<PathBuf, AnnotationStore>,
    graphs: SnapshotCache<PathBuf, Graph>,
    heatmaps: SnapshotCache<(PathBuf, String), tileviz_core::FlatOverlayImage>,
}

impl AppState {
    pub fn new(root: impl Into<PathBuf>, config: ProjectConfig, session_timeout: Duration) -> Self {
        AppState {
            root: root.into(),
            config: Arc::new(config),
            session_timeout,
            sessions: Mutex::new(HashMap::new()),
            slides: SnapshotCache::new(),
            stores: SnapshotCache::new(),
            graphs: SnapshotCache::new(),
            heatmaps: SnapshotCache::new(),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Drops sessions idle for longer than the timeout. Returns how many.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| now.saturating_duration_since(*s.last_used.lock().unwrap()) <= self.session_timeout);
        before - sessions.len()
    }

    fn catalog(&self) -> ApiResult<WorkspaceCatalog> {
        scan_workspace(&self.root).map_err(|e| ApiError::internal(e.to_string()))
    }

    fn slot(&self, sid: &str) -> ApiResult<Arc<SessionSlot>> {
        let slot = self
            .sessions
            .lock()
            .unwrap()
            .get(sid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {sid}")))?;
        slot.touch();
        Ok(slot)
    }

    fn open_slide(&self, catalog: &WorkspaceCatalog, id: &str) -> ApiResult<Arc<SlidePyramid>> {
        let entry = catalog.slide(id).ok_or_else(|| ApiError::not_found(format!("unknown slide {id}")))?;
        let path = catalog.resolve(&entry.path);
        let kind = entry.kind;
        self.slides
            .get_or_load(path.clone(), &path, || match kind {
                SlideKind::Pyramid => SlidePyramid::open(&path),
                SlideKind::Flat => SlidePyramid::open_flat(&path),
            })
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_slide", e.to_string()))
    }

    fn load_source(&self, catalog: &WorkspaceCatalog, entry: &OverlayEntry, slide: &SlidePyramid) -> ApiResult<LayerSource> {
        use tileviz_core::OverlayKind::*;
        let path = catalog.resolve(&entry.path);
        let unprocessable = |code: &'static str, e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e);
        Ok(match entry.kind {
            AnnotationStore => LayerSource::Annotations(
                self.stores
                    .get_or_load(path.clone(), &path, || tileviz_core::AnnotationStore::open_read_only(&path))
                    .map_err(|e| unprocessable("bad_store", e.to_string()))?,
            ),
            Geojson => LayerSource::Annotations(
                self.stores
                    .get_or_load(path.clone(), &path, || -> Result<_, String> {
                        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
                        let (items, _) = parse_feature_collection(&text).map_err(|e| e.to_string())?;
                        let mut store = tileviz_core::AnnotationStore::in_memory().map_err(|e| e.to_string())?;
                        store.insert_annotations(items).map_err(|e| e.to_string())?;
                        Ok(store)
                    })
                    .map_err(|e| unprocessable("bad_geojson", e))?,
            ),
            GraphJson => LayerSource::Graph(
                self.graphs
                    .get_or_load(path.clone(), &path, || import_graph_json(&path))
                    .map_err(|e| unprocessable("bad_graph", e.to_string()))?,
            ),
            ImageOverlay => LayerSource::Heatmap(
                self.heatmaps
                    .get_or_load((path.clone(), slide.id().to_string()), &path, || load_flat_overlay(&path, slide))
                    .map_err(|e| match e {
                        SlideError::AspectRatioMismatch { .. } => unprocessable("aspect_ratio_mismatch", e.to_string()),
                        _ => unprocessable("bad_image", e.to_string()),
                    })?,
            ),
            SlideOverlay => LayerSource::SlideOverlay(
                self.slides
                    .get_or_load(path.clone(), &path, || SlidePyramid::open(&path))
                    .map_err(|e| unprocessable("bad_slide", e.to_string()))?,
            ),
        })
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn parse_json(body: &Bytes) -> ApiResult<Value> {
    if body.is_empty() {
        return Ok(json!({}));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn slide_info(slide: &SlidePyramid) -> Value {
    json!({
        "id": slide.id(),
        "width": slide.width(),
        "height": slide.height(),
        "tile_size": slide.tile_size(),
        "levels": slide.grid_levels(),
        "mpp": slide.mpp(),
    })
}

fn describe_session(s: &Session) -> Value {
    json!({
        "session_id": s.id(),
        "version": s.version(),
        "slide": slide_info(s.slide()),
        "layers": s.layers().iter().map(|l| l.describe()).collect::<Vec<_>>(),
    })
}

async fn list_slides(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let st = state.clone();
    let catalog = blocking(move || st.catalog()).await?;
    let mut body = serde_json::to_value(&catalog).map_err(|e| ApiError::internal(e.to_string()))?;
    body["start_slide"] = json!(state.config.start_slide);
    Ok(Json(body))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let body = parse_json(&body)?;
    let slide_id = body
        .get("slide")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("body must be {\"slide\": <slide id>}"))?
        .to_string();
    let st = state.clone();
    let slide = blocking(move || {
        let catalog = st.catalog()?;
        st.open_slide(&catalog, &slide_id)
    })
    .await?;
    let sid = format!("{:032x}", rand::random::<u128>());
    let session = Session::new(sid.clone(), slide, state.config.clone());
    let body = describe_session(&session);
    let slot = SessionSlot {
        slide_id: session.slide().id().to_string(),
        session: RwLock::new(session),
        last_used: Mutex::new(Instant::now()),
    };
    state.sessions.lock().unwrap().insert(sid, Arc::new(slot));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, UrlPath(sid): UrlPath<String>) -> ApiResult<Json<Value>> {
    let slot = state.slot(&sid)?;
    let s = slot.session.read().unwrap();
    Ok(Json(describe_session(&s)))
}

async fn delete_session(State(state): State<Arc<AppState>>, UrlPath(sid): UrlPath<String>) -> ApiResult<StatusCode> {
    match state.sessions.lock().unwrap().remove(&sid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("unknown session {sid}"))),
    }
}

async fn session_overlays(State(state): State<Arc<AppState>>, UrlPath(sid): UrlPath<String>) -> ApiResult<Json<Value>> {
    let slot = state.slot(&sid)?;
    let st = state.clone();
    let catalog = blocking(move || st.catalog()).await?;
    Ok(Json(json!({ "slide": slot.slide_id, "overlays": catalog.overlays_for(&slot.slide_id) })))
}

async fn add_layer(
    State(state): State<Arc<AppState>>,
    UrlPath(sid): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body = parse_json(&body)?;
    let slot = state.slot(&sid)?;
    let source = body.get("source").map(|v| v.as_str().ok_or_else(|| ApiError::bad_request("source must be a string")));
    let source = source.transpose()?.map(str::to_string);
    let kind = match body.get("kind") {
        None => None,
        Some(k) => Some(
            k.as_str()
                .and_then(tileviz_core::OverlayKind::parse)
                .ok_or_else(|| ApiError::bad_request(format!("unknown overlay kind {k}")))?,
        ),
    };
    if source.is_none() && kind.is_none() {
        return Err(ApiError::bad_request("body needs \"source\" (overlay path) or \"kind\""));
    }
    let params = body.get("params").cloned();

    let st = state.clone();
    let slide_id = slot.slide_id.clone();
    let slide = slot.session.read().unwrap().slide().clone();
    let (layer_source, path) = blocking(move || {
        let catalog = st.catalog()?;
        let entry = catalog
            .overlays_for(&slide_id)
            .iter()
            .find(|o| source.as_deref().is_none_or(|s| o.path == s) && kind.is_none_or(|k| o.kind == k))
            .cloned()
            .ok_or_else(|| {
                ApiError::not_found(format!("no overlay paired with slide {slide_id} matches the request"))
            })?;
        Ok((st.load_source(&catalog, &entry, &slide)?, entry.path))
    })
    .await?;

    let mut session = slot.session.write().unwrap();
    let (layer_id, version) = session.add_layer(layer_source, Some(path), params.as_ref())?;
    let layer = session.layer(&layer_id).map(|l| l.describe());
    Ok((StatusCode::CREATED, Json(json!({ "layer_id": layer_id, "version": version, "layer": layer })))
        .into_response())
}

async fn update_layer(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, lid)): UrlPath<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let delta = parse_json(&body)?;
    let slot = state.slot(&sid)?;
    let mut session = slot.session.write().unwrap();
    let version = session.update_layer(&lid, &delta)?;
    Ok(Json(json!({ "version": version, "layer": session.layer(&lid).map(|l| l.describe()) })))
}

async fn delete_layer(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, lid)): UrlPath<(String, String)>,
) -> ApiResult<Json<Value>> {
    let slot = state.slot(&sid)?;
    let version = slot.session.write().unwrap().remove_layer(&lid)?;
    Ok(Json(json!({ "version": version })))
}

#[derive(Deserialize)]
struct PointQuery {
    x: f64,
    y: f64,
    tol: Option<f64>,
}

async fn lookup(
    State(state): State<Arc<AppState>>,
    UrlPath(sid): UrlPath<String>,
    query: Result<Query<PointQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let tol = q.tol.unwrap_or(0.0);
    if !(q.x.is_finite() && q.y.is_finite() && tol.is_finite() && tol >= 0.0) {
        return Err(ApiError::bad_request("x, y must be finite and tol non-negative"));
    }
    let slot = state.slot(&sid)?;
    let s = slot.session.read().unwrap();
    Ok(Json(s.lookup(q.x, q.y, tol)))
}

async fn properties(State(state): State<Arc<AppState>>, UrlPath(sid): UrlPath<String>) -> ApiResult<Json<Value>> {
    let slot = state.slot(&sid)?;
    let s = slot.session.read().unwrap();
    Ok(Json(s.property_summary()))
}

enum TileTarget {
    Layer(Arc<Layer>),
    Composite(Vec<Arc<Layer>>),
}

async fn tile(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, lid, v, z, x, file)): UrlPath<(String, String, String, String, String, String)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let bad_coord = || ApiError::not_found("malformed tile address");
    let y: u32 = file.strip_suffix(".png").ok_or_else(bad_coord)?.parse().map_err(|_| bad_coord())?;
    let (v, z, x): (u64, u32, u32) = (
        v.parse().map_err(|_| bad_coord())?,
        z.parse().map_err(|_| bad_coord())?,
        x.parse().map_err(|_| bad_coord())?,
    );
    let slot = state.slot(&sid)?;
    let (slide, target, changed_at, current) = {
        let s = slot.session.read().unwrap();
        let (target, changed_at) = if lid == COMPOSITE_LAYER_ID {
            (TileTarget::Composite(s.draw_order()), s.composite_changed_at())
        } else {
            let layer = s.layer(&lid).ok_or_else(|| ApiError::not_found(format!("unknown layer {lid}")))?;
            (TileTarget::Layer(layer.clone()), layer.changed_at)
        };
        (s.slide().clone(), target, changed_at, s.version())
    };
    if v > current {
        return Err(ApiError::not_found(format!("version {v} does not exist yet (current {current})")));
    }
    if v < changed_at {
        return Err(ApiError {
            extra: Some(json!({ "current_version": current, "layer_changed_at": changed_at })),
            ..ApiError::new(
                StatusCode::CONFLICT,
                "stale_version",
                format!("layer {lid} changed at version {changed_at}; requested {v}"),
            )
        });
    }
    let coord = TileCoord::new(z, x, y);
    if !tile_in_range(&slide, coord) {
        return Err(ApiError::not_found(format!("tile {z}/{x}/{y} is outside the slide")));
    }
    let etag = format!("\"{sid}-{lid}-{changed_at}-{z}-{x}-{y}\"");
    let cache = HeaderValue::from_static("public, max-age=31536000, immutable");
    if headers.get(header::IF_NONE_MATCH).is_some_and(|h| h.as_bytes() == etag.as_bytes()) {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, etag), (header::CACHE_CONTROL, cache.to_str().unwrap().into())])
            .into_response());
    }
    let png = blocking(move || {
        let img = match &target {
            TileTarget::Layer(l) => render_layer_tile(&slide, l, coord)?,
            TileTarget::Composite(ls) => render_composite_tile(&slide, ls, coord)?,
        };
        img.to_png().map_err(|e| ApiError::internal(e.to_string()))
    })
    .await?;
    let mut resp = Response::new(Body::from(png));
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    h.insert(header::CACHE_CONTROL, cache);
    h.insert(header::ETAG, HeaderValue::from_str(&etag).map_err(|e| ApiError::internal(e.to_string()))?);
    Ok(resp)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/slides", get(list_slides))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{sid}", get(get_session).delete(delete_session))
        .route("/api/sessions/{sid}/overlays", get(session_overlays))
        .route("/api/sessions/{sid}/layers", post(add_layer))
        .route("/api/sessions/{sid}/layers/{lid}", patch(update_layer).delete(delete_layer))
        .route("/api/sessions/{sid}/query", get(lookup))
        .route("/api/sessions/{sid}/props", get(properties))
        .route("/tiles/{sid}/{lid}/{v}/{z}/{x}/{file}", get(tile))
        .with_state(state)
}

/// Periodically evicts idle sessions until the process exits.
pub fn spawn_evictor(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let period = (state.session_timeout / 4).clamp(Duration::from_millis(100), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        loop {
            ticker.tick().await;
            let n = state.evict_idle(Instant::now());
            if n > 0 {
                tracing::info!(evicted = n, "dropped idle sessions");
            }
        }
    })
}

pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, workspace = %state.root.display(), "serving");
    spawn_evictor(state.clone());
    axum::serve(listener, router(state)).await
}
