//! REST routes. Payloads are the domain types serialized as JSON; errors
//! are `ApiError` bodies with the matching HTTP status.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::error::{ApiError, ErrorCode};
use crate::project::{CreateProject, EditRequest};
use crate::service::{AnalysisRequest, ProjectService};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status())
            .unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type Shared = Arc<ProjectService>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.body_text()))
}

/// Runs a blocking service call off the async executor.
async fn blocking<T, F>(svc: Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&ProjectService) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Storage, format!("worker failed: {e}")))?
}

async fn create(
    State(svc): State<Shared>,
    payload: Result<Json<CreateProject>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let p = blocking(svc, move |s| s.create_project(req)).await?;
    Ok((StatusCode::CREATED, Json(p.as_ref())).into_response())
}

async fn fetch(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let p = blocking(svc, move |s| s.get(&id)).await?;
    Ok(Json(p.as_ref()).into_response())
}

async fn edit(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    payload: Result<Json<EditRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let p = blocking(svc, move |s| s.commit_edit(&id, req)).await?;
    Ok(Json(p.as_ref()).into_response())
}

async fn finalize(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let r = blocking(svc, move |s| s.finalize(&id)).await?;
    Ok(Json(r).into_response())
}

async fn export(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bytes = blocking(svc, move |s| s.export(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn analyze(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    payload: Option<Json<AnalysisRequest>>,
) -> Result<Response, ApiError> {
    let req = payload.map(|Json(r)| r).unwrap_or_default();
    let r = blocking(svc, move |s| s.analyze(&id, &req)).await?;
    Ok(Json(r).into_response())
}

async fn latest(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let r = blocking(svc, move |s| s.latest_analysis(&id)).await?;
    Ok(Json(r).into_response())
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/projects", post(create))
        .route("/projects/{id}", get(fetch))
        .route("/projects/{id}/edits", post(edit))
        .route("/projects/{id}/finalize", post(finalize))
        .route("/projects/{id}/export", get(export))
        .route("/projects/{id}/analysis", post(analyze))
        .route("/projects/{id}/analysis/latest", get(latest))
        .with_state(service)
}
