//! Stateless HTTP JSON API over one fixed [`CausalSystem`].
//!
//! The model is loaded once at start-up and shared read-only between
//! requests, so any permutation of a request sequence yields identical
//! per-request responses. Bodies are the [`timerec_core::api`] types, which
//! the CLI also emits, keeping the two front ends numerically identical.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use timerec_core::api::{
    self, CedRequest, CounterfactualRequest, FrontierRequest, IndividualRequest, IndividualResponse, PredictRequest,
    RecourseRequest, ScmDescription,
};
use timerec_core::bench::{ced_table, random_unfavorable_individual, BenchError, CedReport};
use timerec_core::recourse::{lambda_frontier, solve, Diagnostics, FrontierEntry, RecourseError};
use timerec_core::scm::{Prediction, ScmError};
use timerec_core::{CausalSystem, RecourseSolution};
use tower_http::cors::CorsLayer;
use tracing::{info, warn};

/// Largest Monte Carlo sample a single `/api/ced` request may ask for.
pub const MAX_CED_ROWS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    Infeasible,
    Internal,
}

/// Body of every non-success response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError { code: ErrorCode::BadRequest, message: message.into(), diagnostics: None }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError { code: ErrorCode::Internal, message: message.into(), diagnostics: None }
    }

    fn status(&self) -> StatusCode {
        match self.code {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Infeasible => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<RecourseError> for ApiError {
    fn from(e: RecourseError) -> Self {
        match e {
            RecourseError::NoFeasibleAction(d) => ApiError {
                code: ErrorCode::Infeasible,
                message: RecourseError::NoFeasibleAction(d.clone()).to_string(),
                diagnostics: Some(d),
            },
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<ScmError> for ApiError {
    fn from(e: ScmError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<BenchError> for ApiError {
    fn from(e: BenchError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parses a JSON body so malformed input still yields an [`ApiError`].
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

type Shared = State<Arc<CausalSystem>>;

pub fn router(system: Arc<CausalSystem>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/scm", get(describe))
        .route("/api/predict", post(predict))
        .route("/api/counterfactual", post(counterfactual))
        .route("/api/recourse", post(recourse))
        .route("/api/frontier", post(frontier))
        .route("/api/ced", post(ced))
        .route("/api/individual", post(individual))
        .layer(CorsLayer::permissive())
        .with_state(system)
}

pub async fn serve(system: Arc<CausalSystem>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(system)).await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn describe(State(sys): Shared) -> Json<ScmDescription> {
    Json(ScmDescription::new(&sys))
}

async fn predict(State(sys): Shared, body: Bytes) -> ApiResult<Prediction> {
    let req: PredictRequest = parse(&body)?;
    Ok(Json(sys.scm().predict(&req.instance)?))
}

async fn counterfactual(State(sys): Shared, body: Bytes) -> ApiResult<api::CounterfactualResponse> {
    let req: CounterfactualRequest = parse(&body)?;
    Ok(Json(api::counterfactual(&sys, &req)?))
}

async fn recourse(State(sys): Shared, body: Bytes) -> ApiResult<RecourseSolution> {
    let req: RecourseRequest = parse(&body)?;
    let solution = blocking(move || solve(&req.problem(&sys)).map_err(ApiError::from)).await;
    if let Err(e) = &solution {
        warn!(code = ?e.code, "recourse request failed: {}", e.message);
    }
    Ok(Json(solution?))
}

async fn frontier(State(sys): Shared, body: Bytes) -> ApiResult<Vec<FrontierEntry>> {
    let req: FrontierRequest = parse(&body)?;
    let entries = blocking(move || lambda_frontier(&req.base.problem(&sys), &req.lambdas).map_err(ApiError::from)).await?;
    Ok(Json(entries))
}

async fn ced(State(sys): Shared, body: Bytes) -> ApiResult<CedReport> {
    let req: CedRequest = parse(&body)?;
    let (alpha, n, seed, opts) = req.resolved();
    if n > MAX_CED_ROWS {
        return Err(ApiError::bad_request(format!("n = {n} exceeds the per-request limit of {MAX_CED_ROWS}")));
    }
    let report = blocking(move || ced_table(sys.scm(), alpha, n, seed, opts).map_err(ApiError::from)).await?;
    Ok(Json(report))
}

async fn individual(State(sys): Shared, body: Bytes) -> ApiResult<IndividualResponse> {
    let req: IndividualRequest = if body.is_empty() { IndividualRequest::default() } else { parse(&body)? };
    let instance = random_unfavorable_individual(sys.scm(), req.seed)?;
    let prediction = sys.scm().predict(&instance)?;
    Ok(Json(IndividualResponse { instance, prediction }))
}
