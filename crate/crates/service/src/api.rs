//! HTTP routes.
//!
//! | method | path                                   | body in            | body out            |
//! |--------|----------------------------------------|--------------------|---------------------|
//! | GET    | `/formulas`                            |                    | builtin catalog     |
//! | POST   | `/sessions`                            | `CreateRequest`    | `CreateResponse` 201|
//! | POST   | `/sessions/import`                     | `ExportDocument`   | `CreateResponse` 201|
//! | GET    | `/sessions/{id}/ranking?limit=n`       |                    | `RankingBody`       |
//! | GET    | `/sessions/{id}/hierarchy`             |                    | `HierarchyBody`     |
//! | POST   | `/sessions/{id}/feedback`              | `FeedbackRequest`  | `RankingBody`       |
//! | POST   | `/sessions/{id}/undo`                  |                    | `RankingBody`       |
//! | POST   | `/sessions/{id}/reanalyze`             | `ReanalyzeRequest` | `ReanalyzeResponse` |
//! | GET    | `/sessions/{id}/explanation/{element}` |                    | `ExplanationBody`   |
//! | GET    | `/sessions/{id}/export`                |                    | `ExportDocument`    |
//!
//! Errors come back as `{"error": kind, "message": text}` (plus `offset`
//! for formula syntax errors) with 400 for invalid input, 404 for unknown
//! sessions or elements and 409 for requests the session state forbids
//! (feedback after the fault was found, undo on an empty log).

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use sbfl_core::formula::list_builtins;
use sbfl_core::spectrum::ElementId;

use crate::error::ServiceError;
use crate::store::SessionStore;
use crate::wire::{
    CreateRequest, CreateResponse, ExplanationBody, ExportDocument, FeedbackRequest, FormulaInfo, HierarchyBody,
    RankingBody, ReanalyzeRequest, ReanalyzeResponse,
};

type Store = State<Arc<SessionStore>>;
type Reply<T> = Result<Json<T>, ServiceError>;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/formulas", get(formulas))
        .route("/sessions", post(create))
        .route("/sessions/import", post(import))
        .route("/sessions/{id}/ranking", get(ranking))
        .route("/sessions/{id}/hierarchy", get(hierarchy))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/reanalyze", post(reanalyze))
        .route("/sessions/{id}/explanation/{element}", get(explanation))
        .route("/sessions/{id}/export", get(export))
        .with_state(store)
}

/// Decodes a JSON body ourselves so malformed input gets the same error
/// shape as every other validation failure.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::invalid("MalformedBody", e.to_string()))
}

/// Store calls do real work (ranking, file IO), so keep them off the
/// async workers.
async fn run<T, F>(store: Arc<SessionStore>, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ServiceError::Internal(format!("request task failed: {e}")))?
}

async fn formulas() -> Json<Vec<FormulaInfo>> {
    Json(
        list_builtins()
            .into_iter()
            .map(|(name, definition)| FormulaInfo {
                name: name.to_string(),
                definition: definition.to_string(),
            })
            .collect(),
    )
}

async fn create(State(store): Store, bytes: Bytes) -> Result<(StatusCode, Json<CreateResponse>), ServiceError> {
    let request: CreateRequest = body(&bytes)?;
    let (session, ranking) = run(store, move |s| s.create(request)).await?;
    Ok((StatusCode::CREATED, Json(CreateResponse { session, ranking })))
}

async fn import(State(store): Store, bytes: Bytes) -> Result<(StatusCode, Json<CreateResponse>), ServiceError> {
    let export: ExportDocument = body(&bytes)?;
    let (session, ranking) = run(store, move |s| s.import(export)).await?;
    Ok((StatusCode::CREATED, Json(CreateResponse { session, ranking })))
}

#[derive(Deserialize)]
struct RankingQuery {
    limit: Option<usize>,
}

async fn ranking(
    State(store): Store,
    Path(id): Path<String>,
    query: Result<Query<RankingQuery>, QueryRejection>,
) -> Reply<RankingBody> {
    let Query(RankingQuery { limit }) = query.map_err(|e| ServiceError::invalid("MalformedQuery", e.body_text()))?;
    run(store, move |s| s.ranking(&id, limit)).await.map(Json)
}

async fn hierarchy(State(store): Store, Path(id): Path<String>) -> Reply<HierarchyBody> {
    run(store, move |s| s.hierarchy(&id)).await.map(Json)
}

async fn feedback(State(store): Store, Path(id): Path<String>, bytes: Bytes) -> Reply<RankingBody> {
    let request: FeedbackRequest = body(&bytes)?;
    run(store, move |s| s.feedback(&id, request)).await.map(Json)
}

async fn undo(State(store): Store, Path(id): Path<String>) -> Reply<RankingBody> {
    run(store, move |s| s.undo(&id)).await.map(Json)
}

async fn reanalyze(State(store): Store, Path(id): Path<String>, bytes: Bytes) -> Reply<ReanalyzeResponse> {
    let request: ReanalyzeRequest = body(&bytes)?;
    run(store, move |s| s.reanalyze(&id, request.spectrum)).await.map(Json)
}

async fn explanation(State(store): Store, Path((id, element)): Path<(String, String)>) -> Reply<ExplanationBody> {
    let element: u64 = element.parse().map_err(|_| ServiceError::NotFound {
        kind: "UnknownElement",
        message: format!("`{element}` is not an element id"),
    })?;
    run(store, move |s| s.explanation(&id, ElementId(element)))
        .await
        .map(Json)
}

async fn export(State(store): Store, Path(id): Path<String>) -> Reply<ExportDocument> {
    run(store, move |s| s.export(&id)).await.map(Json)
}
