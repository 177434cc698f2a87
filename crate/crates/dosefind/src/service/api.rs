//! HTTP routes.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use super::store::{Event, Store};
use super::{now_ms, AppState, CreateSession, Session, SessionView, Submission, SubmitOutcomes};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("session not found")]
    NotFound,
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    State(String),
    #[error("revision conflict; current revision is {current_revision}")]
    Conflict { current_revision: u64 },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn validation(e: impl std::fmt::Display) -> Self {
        Self::Validation(e.to_string())
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::Internal(e.to_string())
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::NotFound => "not_found",
            Self::BadRequest(_) => "bad_request",
            Self::Validation(_) => "validation",
            Self::State(_) => "state",
            Self::Conflict { .. } => "conflict",
            Self::Internal(_) => "internal",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            Self::NotFound => StatusCode::NOT_FOUND,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Validation(_) | Self::State(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Conflict { .. } => StatusCode::CONFLICT,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::JsonDataError(e) => Self::Validation(e.body_text()),
            r => Self::BadRequest(r.body_text()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind(), "message": self.to_string() });
        if let Self::Conflict { current_revision } = self {
            body["current_revision"] = current_revision.into();
        }
        if let Self::Internal(m) = &self {
            tracing::error!(message = %m, "internal error");
        }
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/outcomes", post(submit_outcomes))
        .route("/sessions/{id}/posterior", get(get_posterior))
        .with_state(state)
}

async fn healthz(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": app.len() }))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let Json(mut config) = body?;
    config.seed.get_or_insert_with(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let id = uuid::Uuid::new_v4().to_string();
    let app2 = app.clone();
    let view = blocking(move || {
        let at = now_ms();
        let s = Session::create(id.clone(), config.clone(), at)?;
        if let Some(st) = &app2.store {
            st.append(&id, &Event::Created { config, at_ms: at }).map_err(ApiError::internal)?;
            st.write_snapshot(&s.view()).map_err(ApiError::internal)?;
        }
        Ok(app2.insert(s).view())
    })
    .await?;
    Ok((StatusCode::CREATED, Json((*view).clone())))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let h = app.get(&id).ok_or(ApiError::NotFound)?;
    Ok(Json((*h.view()).clone()))
}

async fn submit_outcomes(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SubmitOutcomes>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    let h = app.get(&id).ok_or(ApiError::NotFound)?;
    let Json(req) = body?;
    let mut guard = h.session.clone().lock_owned().await;
    let app2 = app.clone();
    let h2 = h.clone();
    blocking(move || {
        let s = &mut *guard;
        match s.prepare(req.revision, req.outcomes)? {
            Submission::Replay => {
                let mut v = s.view();
                v.replayed = true;
                Ok(Json(v))
            }
            Submission::Accept(p) => {
                let at = now_ms();
                if let Some(st) = &app2.store {
                    let e = Event::Outcomes {
                        revision: s.revision(),
                        outcomes: p.outcomes.clone(),
                        at_ms: at,
                    };
                    st.append(s.id(), &e).map_err(ApiError::internal)?;
                }
                s.commit(p, at);
                let v = s.view();
                if let Some(st) = &app2.store {
                    st.write_snapshot(&v).map_err(ApiError::internal)?;
                }
                h2.publish(v.clone());
                Ok(Json(v))
            }
        }
    })
    .await
}

async fn get_posterior(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<super::PosteriorView>> {
    let h = app.get(&id).ok_or(ApiError::NotFound)?;
    let mut guard = h.session.clone().lock_owned().await;
    blocking(move || guard.posterior().map(Json)).await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

/// Serves until SIGINT or SIGTERM, then flushes session snapshots.
pub async fn serve(addr: SocketAddr, state_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let store = state_dir.map(Store::open).transpose()?;
    let app = Arc::new(AppState::new(store)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(app.clone()))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    app.flush()
}
