//! In-process client for the router over a demo workspace.

#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tileviz_cli::demo::write_demo_workspace;
use tileviz_cli::{router, AppState, DEFAULT_SESSION_TIMEOUT};
use tileviz_core::{ProjectConfig, RasterImage};
use tower::ServiceExt;

pub const W: u32 = 2048;
pub const H: u32 = 1536;
pub const N: usize = 400;

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn image(&self) -> RasterImage {
        assert_eq!(self.status, StatusCode::OK, "{}", String::from_utf8_lossy(&self.body));
        RasterImage::from_png(&self.body).unwrap()
    }
}

pub struct Api {
    app: Router,
    pub state: Arc<AppState>,
    _dir: TempDir,
}

impl Api {
    pub fn new(config: ProjectConfig) -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_demo_workspace(dir.path(), "case_01", W, H, N).unwrap();
        let state = Arc::new(AppState::new(dir.path(), config, DEFAULT_SESSION_TIMEOUT));
        Api { app: router(state.clone()), state, _dir: dir }
    }

    pub fn root(&self) -> &std::path::Path {
        self._dir.path()
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<Value>, headers: &[(header::HeaderName, &str)]) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(k, *v);
        }
        let body = match body {
            Some(v) => {
                req = req.header(header::CONTENT_TYPE, "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, body }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None, &[]).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Some(body), &[]).await
    }

    pub async fn patch(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::PATCH, uri, Some(body), &[]).await
    }

    pub async fn delete(&self, uri: &str) -> Reply {
        self.send(Method::DELETE, uri, None, &[]).await
    }

    pub async fn session(&self) -> String {
        let r = self.post("/api/sessions", json!({"slide": "case_01"})).await;
        assert_eq!(r.status, StatusCode::CREATED);
        r.json()["session_id"].as_str().unwrap().to_string()
    }

    pub async fn overlay_path(&self, sid: &str, kind: &str) -> String {
        let r = self.get(&format!("/api/sessions/{sid}/overlays")).await.json();
        r["overlays"].as_array().unwrap().iter().find(|o| o["kind"] == kind).unwrap()["path"].as_str().unwrap().into()
    }
}

/// Scan, session, layer rules, filter PATCH and version-keyed tile caching.
pub async fn scripted_session(api: &Api) {

    let slides = api.get("/api/slides").await.json();
    assert_eq!(slides["slides"][0]["id"], "case_01");
    assert_eq!(slides["overlays"]["case_01"].as_array().unwrap().len(), 4);

    let created = api.post("/api/sessions", json!({"slide": "case_01"})).await;
    assert_eq!(created.status, StatusCode::CREATED);
    let s = created.json();
    assert_eq!(s["version"], 1);
    assert_eq!(s["slide"]["width"], W);
    assert_eq!(s["layers"][0]["layer_id"], "base");
    let sid = s["session_id"].as_str().unwrap().to_string();
    let base = format!("/api/sessions/{sid}");

    let added = api.post(&format!("{base}/layers"), json!({"kind": "annotation-store"})).await;
    assert_eq!(added.status, StatusCode::CREATED);
    let added = added.json();
    assert_eq!(added["version"], 2);
    let lid = added["layer_id"].as_str().unwrap().to_string();

    let second = api.post(&format!("{base}/layers"), json!({"kind": "geojson"})).await;
    assert_eq!(second.status, StatusCode::CONFLICT);
    assert_eq!(second.json()["error"], "layer_combination");

    assert_eq!(api.post(&format!("{base}/layers"), json!({"kind": "graph-json"})).await.json()["version"], 3);
    let heat = api.post(&format!("{base}/layers"), json!({"kind": "image-overlay", "params": {"alpha": 128}})).await;
    assert_eq!(heat.status, StatusCode::CREATED);
    assert_eq!(heat.json()["version"], 4);

    // Layer tiles stay valid for every version since the layer last changed.
    let at2 = api.get(&format!("/tiles/{sid}/{lid}/2/1/1/1.png")).await;
    assert_eq!(at2.status, StatusCode::OK);
    assert_eq!(at2.headers[header::CACHE_CONTROL], "public, max-age=31536000, immutable");
    assert_eq!(at2.headers[header::CONTENT_TYPE], "image/png");
    let at4 = api.get(&format!("/tiles/{sid}/{lid}/4/1/1/1.png")).await;
    assert_eq!(at4.body, at2.body);
    assert_eq!(at4.headers[header::ETAG], at2.headers[header::ETAG]);
    let etag = at2.headers[header::ETAG].to_str().unwrap().to_string();
    let cached = api
        .send(Method::GET, &format!("/tiles/{sid}/{lid}/4/1/1/1.png"), None, &[(header::IF_NONE_MATCH, &etag)])
        .await;
    assert_eq!(cached.status, StatusCode::NOT_MODIFIED);
    assert!(cached.body.is_empty());

    let patched = api.patch(&format!("{base}/layers/{lid}"), json!({"filter": "prob > 0.5"})).await;
    assert_eq!(patched.status, StatusCode::OK);
    let patched = patched.json();
    assert_eq!(patched["version"], 5);
    assert_eq!(patched["layer"]["params"]["filter"], "(prob > 0.5)");

    let stale = api.get(&format!("/tiles/{sid}/{lid}/4/1/1/1.png")).await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    let stale = stale.json();
    assert_eq!(stale["error"], "stale_version");
    assert_eq!(stale["current_version"], 5);
    assert_eq!(stale["layer_changed_at"], 5);
    let fresh = api.get(&format!("/tiles/{sid}/{lid}/5/1/1/1.png")).await.image();
    assert_ne!(fresh, at2.image());
    assert_eq!(api.get(&format!("/tiles/{sid}/{lid}/6/1/1/1.png")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&format!("/tiles/{sid}/{lid}/5/0/9/0.png")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&format!("/tiles/{sid}/{lid}/5/9/0/0.png")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&format!("/tiles/{sid}/nope/5/0/0/0.png")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&format!("/tiles/{sid}/{lid}/5/0/0/0.jpg")).await.status, StatusCode::NOT_FOUND);

    let bad = api.patch(&format!("{base}/layers/{lid}"), json!({"filter": "prob >"})).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.json()["field"], "filter");
    assert_eq!(api.get(&base).await.json()["version"], 5, "rejected deltas leave the session untouched");

    let composite = api.get(&format!("/tiles/{sid}/composite/5/0/1/1.png")).await.image();
    assert!(composite.pixels().chunks(4).all(|p| p[3] == 255));

    let removed = api.delete(&format!("{base}/layers/{lid}")).await.json();
    assert_eq!(removed["version"], 6);
    assert_eq!(api.get(&format!("/tiles/{sid}/{lid}/6/0/0/0.png")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&base).await.json()["layers"].as_array().unwrap().len(), 3);

    assert_eq!(api.delete(&base).await.status, StatusCode::NO_CONTENT);
    assert_eq!(api.get(&base).await.status, StatusCode::NOT_FOUND);
    assert_eq!(api.get(&format!("/tiles/{sid}/base/6/0/0/0.png")).await.status, StatusCode::NOT_FOUND);
}
