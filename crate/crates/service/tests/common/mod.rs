#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sbfl_core::ingest::export_canonical;
use sbfl_core::interactive::CallGraph;
use sbfl_core::spectrum::Spectrum;
use sbfl_service::{router, SessionStore};

pub const WORKED: &str = include_str!("../fixtures/worked.json");

pub fn worked() -> Value {
    serde_json::from_str(WORKED).unwrap()
}

pub fn document(spectrum: &Spectrum, graph: Option<&CallGraph>) -> Value {
    serde_json::from_str(&export_canonical(spectrum, graph)).unwrap()
}

pub struct App {
    pub router: Router,
    pub store: Arc<SessionStore>,
    pub dir: tempfile::TempDir,
}

pub fn app(seed: u64) -> App {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(SessionStore::open(dir.path(), seed).unwrap());
    App {
        router: router(store.clone()),
        store,
        dir,
    }
}

impl App {
    /// A second store over the same directory, as after a restart.
    pub fn reopened(&self) -> Router {
        router(Arc::new(SessionStore::open(self.dir.path(), 0).unwrap()))
    }

    pub async fn call(&self, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Vec<u8>) {
        call(&self.router, method, uri, body).await
    }

    pub async fn json(&self, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap())
    }

    /// Creates a session and returns its id.
    pub async fn create(&self, spectrum: Value, formula: &str, granularity: Option<&str>) -> String {
        let mut request = json!({ "spectrum": spectrum, "formula": formula });
        if let Some(kind) = granularity {
            request["granularity"] = json!(kind);
        }
        let (status, body) = self.json("POST", "/sessions", Some(&request)).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session"].as_str().unwrap().to_string()
    }
}

pub async fn call(router: &Router, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(serde_json::to_vec(v).unwrap()),
            None => Body::empty(),
        })
        .unwrap();
    let response = router.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}
