//! HTTP/JSON front end of the service.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use judge_core::model::{Bytes, SourceFile};
use judge_core::Payload;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use super::{Registration, Service, ServiceError};
use crate::package::PackageError;
use crate::replay::{replay, to_csv, ReplayError};

pub const ADMIN_HEADER: &str = "x-judge-admin";

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub admin_token: String,
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.code, "message": self.message});
        if let Some(d) = self.details {
            body["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let message = e.to_string();
        match e {
            ServiceError::UnknownProblem(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_problem", message),
            ServiceError::UnknownSubmission(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_submission", message)
            }
            ServiceError::PayloadTooLarge { .. } => {
                ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", message)
            }
            ServiceError::BadRequest(_) => ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message),
            ServiceError::Conflict(_) => ApiError::new(StatusCode::CONFLICT, "conflict", message),
            ServiceError::Package(p) => {
                let status = match p {
                    PackageError::NotFound(_) => StatusCode::NOT_FOUND,
                    _ => StatusCode::UNPROCESSABLE_ENTITY,
                };
                let details: Vec<_> = p
                    .diagnostics()
                    .iter()
                    .map(|d| json!({"file": d.file, "message": d.message}))
                    .collect();
                ApiError {
                    details: Some(details.into()),
                    ..ApiError::new(status, "malformed_package", message)
                }
            }
            ServiceError::Journal(_) | ServiceError::Internal(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(app: AppState, ui_dir: Option<PathBuf>) -> Router {
    // Bodies up to this size are read, so a payload over the cap gets a JSON
    // error; larger ones are refused before reading.
    let body_limit = (app.service.config().payload_cap * 2).max(32 << 20);
    let mut router = Router::new()
        .route("/api/problems", get(list_problems).post(register))
        .route("/api/problems/{id}", get(get_problem))
        .route(
            "/api/problems/{id}/submissions",
            axum::routing::post(submit).layer(DefaultBodyLimit::max(body_limit)),
        )
        .route("/api/problems/{id}/leaderboard", get(leaderboard))
        .route("/api/problems/{id}/replay.csv", get(replay_csv))
        .route("/api/submissions/{id}", get(get_submission));
    router = match ui_dir {
        Some(dir) => router.nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true)),
        None => router.route("/ui", get(|| async { (StatusCode::NOT_FOUND, "no UI directory configured") })),
    };
    router.with_state(app)
}

async fn list_problems(State(app): State<AppState>) -> impl IntoResponse {
    Json(app.service.problems())
}

async fn get_problem(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.service.problem(&id)?))
}

#[derive(Deserialize)]
struct RegisterBody {
    path: PathBuf,
}

async fn register(
    State(app): State<AppState>,
    headers: HeaderMap,
    Json(body): Json<RegisterBody>,
) -> ApiResult<impl IntoResponse> {
    let token = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
    match token {
        None => return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing X-Judge-Admin")),
        Some(t) if t != app.admin_token => {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "forbidden", "wrong admin token"))
        }
        Some(_) => {}
    }
    let service = app.service.clone();
    let (id, registration) = tokio::task::spawn_blocking(move || service.register_package(&body.path))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let status = match registration {
        Registration::Registered => StatusCode::CREATED,
        Registration::AlreadyPresent => StatusCode::OK,
    };
    Ok((status, Json(json!({"problem_id": id}))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitBody {
    user_id: String,
    language_id: String,
    #[serde(default)]
    file_name: Option<String>,
    #[serde(default)]
    source_b64: Option<String>,
    #[serde(default)]
    binary_b64: Option<String>,
}

fn decode(field: &str, data: &str) -> ApiResult<Vec<u8>> {
    BASE64
        .decode(data.trim())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("{field}: {e}")))
}

async fn submit(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SubmitBody>,
) -> ApiResult<impl IntoResponse> {
    let payload = match (body.source_b64, body.binary_b64) {
        (Some(source), None) => Payload::Source {
            language_id: body.language_id,
            files: vec![SourceFile {
                name: body.file_name.unwrap_or_else(|| "main".into()),
                content: Bytes(decode("source_b64", &source)?),
            }],
        },
        (None, Some(binary)) if body.language_id == "binary" => {
            Payload::StaticBinary(Bytes(decode("binary_b64", &binary)?))
        }
        (None, Some(_)) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                "binary_b64 requires language_id \"binary\"",
            ))
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                "exactly one of source_b64 and binary_b64 is required",
            ))
        }
    };
    let submission_id = app.service.submit(&id, &body.user_id, payload)?;
    Ok((StatusCode::ACCEPTED, Json(json!({"submission_id": submission_id}))))
}

async fn get_submission(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.service.submission(&id)?))
}

async fn leaderboard(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.service.leaderboard(&id)?))
}

async fn replay_csv(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    app.service.problem(&id)?;
    let records = app.service.records()?;
    let series = replay(&records, Some(&id)).map_err(|e| match e {
        ReplayError::UnknownProblem(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_problem", e.to_string()),
        _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    })?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], to_csv(&series)))
}
