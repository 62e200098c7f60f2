//! JSON over HTTP.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sidekick_core::capture::ErrorContext;

use crate::service::{ServiceError, SessionService};
use crate::session::{SessionView, TurnView};

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub owner_id: String,
    /// Explanation the student already got from the one-shot command.
    #[serde(default)]
    pub seed_explanation: Option<String>,
    #[serde(flatten)]
    pub context: ErrorContext,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub token: String,
    pub url: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PostMessageRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShareResponse {
    pub share_token: String,
    pub url: String,
}

/// Turn returned from the message and retry endpoints.
#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResponse {
    #[serde(flatten)]
    pub turn: TurnView,
    pub overuse_warning: bool,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, retryable) = match &self {
            ServiceError::NotFound => (StatusCode::NOT_FOUND, false),
            ServiceError::Forbidden(_) => (StatusCode::FORBIDDEN, false),
            ServiceError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, false),
            ServiceError::Conflict(_) => (StatusCode::CONFLICT, false),
            ServiceError::Backend(_) => (StatusCode::SERVICE_UNAVAILABLE, true),
            ServiceError::Storage(e) => {
                tracing::error!(error = %e, "storage failure");
                (StatusCode::INTERNAL_SERVER_ERROR, false)
            }
        };
        (status, Json(json!({ "error": self.to_string(), "retryable": retryable }))).into_response()
    }
}

type AppState = Arc<SessionService>;

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{token}", get(get_session))
        .route("/api/sessions/{token}/messages", post(post_message))
        .route("/api/sessions/{token}/share", post(share))
        .route("/api/sessions/{token}/retry", post(retry))
        .with_state(service)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::Validation(e.body_text()))
}

async fn create_session(
    State(svc): State<AppState>,
    payload: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateSessionResponse>), ServiceError> {
    let req = body(payload)?;
    let s = svc.create_session(req.context, &req.owner_id, req.seed_explanation.as_deref()).await?;
    let url = svc.session_url(&s.token);
    Ok((StatusCode::CREATED, Json(CreateSessionResponse { token: s.token, url })))
}

async fn get_session(State(svc): State<AppState>, Path(token): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(svc.visit_session(&token).await?))
}

async fn post_message(
    State(svc): State<AppState>,
    Path(token): Path<String>,
    payload: Result<Json<PostMessageRequest>, JsonRejection>,
) -> Result<Json<TurnResponse>, ServiceError> {
    // a share token is refused whatever the body says
    svc.require_owner(&token)?;
    let req = body(payload)?;
    let turn = svc.post_message(&token, &req.text).await?;
    turn_response(&svc, &token, &turn)
}

async fn retry(State(svc): State<AppState>, Path(token): Path<String>) -> Result<Json<TurnResponse>, ServiceError> {
    let turn = svc.retry(&token).await?;
    turn_response(&svc, &token, &turn)
}

fn turn_response(svc: &SessionService, token: &str, turn: &sidekick_core::Turn) -> Result<Json<TurnResponse>, ServiceError> {
    let owner = svc.store().session(token)?.ok_or(ServiceError::NotFound)?.owner_id;
    let warn = svc.check_overuse(&owner, turn.created_at)?.warn;
    Ok(Json(TurnResponse { turn: TurnView::from(turn), overuse_warning: warn }))
}

async fn share(State(svc): State<AppState>, Path(token): Path<String>) -> Result<Json<ShareResponse>, ServiceError> {
    let share_token = svc.create_share_link(&token).await?;
    let url = svc.share_url(&share_token);
    Ok(Json(ShareResponse { share_token, url }))
}
