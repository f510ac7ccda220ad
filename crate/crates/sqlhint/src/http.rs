use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::engine::{ApiError, ClientEvent, Engine, QueryRequest};

pub type Shared = Arc<Mutex<Engine>>;

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownExercise(_) => StatusCode::NOT_FOUND,
            ApiError::NoHintAvailable => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if let ApiError::Internal(e) = &self {
            tracing::error!("{e:#}");
        }
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.is_empty() {
        return Err(ApiError::BadRequest("empty body".into()));
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn with<T>(state: &Shared, f: impl FnOnce(&mut Engine) -> Result<T, ApiError>) -> Result<T, ApiError> {
    let mut engine = state.lock().unwrap_or_else(|p| p.into_inner());
    f(&mut engine)
}

pub fn router(engine: Engine) -> Router {
    let state: Shared = Arc::new(Mutex::new(engine));
    Router::new()
        .route("/exercises", get(list))
        .route("/exercises/{id}", get(detail))
        .route("/exercises/{id}/execute", post(execute))
        .route("/exercises/{id}/hint", post(hint))
        .route("/exercises/{id}/submit", post(submit))
        .route("/exercises/{id}/graph.dot", get(graph_dot))
        .route("/events", post(events))
        .with_state(state)
}

async fn list(State(s): State<Shared>) -> Response {
    Json(with(&s, |e| Ok(e.list_exercises())).unwrap_or_default()).into_response()
}

async fn detail(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(with(&s, |e| e.exercise(&id))?).into_response())
}

async fn execute(State(s): State<Shared>, Path(id): Path<String>, b: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest = body(&b)?;
    Ok(Json(with(&s, |e| e.execute(&id, &req))?).into_response())
}

async fn hint(State(s): State<Shared>, Path(id): Path<String>, b: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest = body(&b)?;
    Ok(Json(with(&s, |e| e.hint(&id, &req))?).into_response())
}

async fn submit(State(s): State<Shared>, Path(id): Path<String>, b: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest = body(&b)?;
    Ok(Json(with(&s, |e| e.submit(&id, &req))?).into_response())
}

async fn graph_dot(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let dot = with(&s, |e| e.graph_dot(&id))?;
    Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz")], dot).into_response())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Batch {
    Many(Vec<ClientEvent>),
    One(ClientEvent),
}

async fn events(State(s): State<Shared>, b: Bytes) -> Result<Response, ApiError> {
    let batch = match body::<Batch>(&b)? {
        Batch::Many(v) => v,
        Batch::One(e) => vec![e],
    };
    let n = with(&s, |e| e.record_events(batch))?;
    Ok(Json(json!({ "accepted": n })).into_response())
}
