//! HTTP facade over the segmentation engines.
//!
//! * `POST /api/segment`: run a method on base64 PGM rasters, optionally with
//!   an iteration trace and metrics against a ground-truth mask.
//! * `GET /api/phantom`: deterministic synthetic case for a given spec.
//! * `GET /api/health`: version and build information.
//! * `/`: static files of the annotation UI.
//!
//! Handlers are stateless; the only shared value is the immutable [`Config`].

pub mod api;
pub mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

use crate::api::{PhantomQuery, SegmentRequest};
use crate::error::{ApiError, MALFORMED_REQUEST};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_PIXEL_BUDGET: usize = 4096 * 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub addr: SocketAddr,
    /// Largest raster, in pixels, a request may carry.
    pub pixel_budget: usize,
    pub static_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            addr: DEFAULT_ADDR.parse().expect("valid default address"),
            pixel_budget: DEFAULT_PIXEL_BUDGET,
            static_dir: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/static")),
        }
    }
}

impl Config {
    /// Reads `SEGSERVE_ADDR`, `SEGSERVE_PIXEL_BUDGET` and `SEGSERVE_STATIC_DIR`.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut config = Self::default();
        if let Some(addr) = lookup("SEGSERVE_ADDR") {
            config.addr = addr
                .parse()
                .map_err(|e| format!("SEGSERVE_ADDR '{addr}': {e}"))?;
        }
        if let Some(budget) = lookup("SEGSERVE_PIXEL_BUDGET") {
            config.pixel_budget = match budget.parse::<usize>() {
                Ok(n) if n > 0 => n,
                _ => return Err(format!("SEGSERVE_PIXEL_BUDGET '{budget}' is not a positive integer")),
            };
        }
        if let Some(dir) = lookup("SEGSERVE_STATIC_DIR") {
            config.static_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    /// Body size that fits three 16-bit rasters at the pixel budget after
    /// base64 expansion, plus room for the JSON envelope.
    pub fn body_limit(&self) -> usize {
        self.pixel_budget
            .saturating_mul(2 * 3)
            .saturating_mul(4)
            / 3
            + (1 << 16)
    }
}

fn json_response<T: serde::Serialize>(value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

async fn segment_route(State(config): State<Arc<Config>>, body: Result<Bytes, BytesRejection>) -> Response {
    let body = match body {
        Ok(b) => b,
        Err(rejection) if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return ApiError::too_large(rejection.body_text()).into_response()
        }
        Err(rejection) => return ApiError::bad_request(MALFORMED_REQUEST, rejection.body_text()).into_response(),
    };
    let request: SegmentRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return ApiError::bad_request(MALFORMED_REQUEST, e.to_string()).into_response(),
    };
    // engines are CPU-bound; keep them off the async workers
    let outcome = tokio::task::spawn_blocking(move || api::handle_segment(&config, &request)).await;
    match outcome {
        Ok(Ok(response)) => json_response(&response),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

async fn phantom_route(
    State(config): State<Arc<Config>>,
    query: Result<Query<PhantomQuery>, QueryRejection>,
) -> Response {
    let Query(query) = match query {
        Ok(q) => q,
        Err(rejection) => return ApiError::bad_request(MALFORMED_REQUEST, rejection.body_text()).into_response(),
    };
    let outcome = tokio::task::spawn_blocking(move || api::handle_phantom(&config, &query)).await;
    match outcome {
        Ok(Ok(payload)) => json_response(&payload),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

async fn health_route(State(config): State<Arc<Config>>) -> Response {
    json_response(&api::handle_health(&config))
}

pub fn router(config: Config) -> Router {
    let limit = config.body_limit();
    let static_dir = config.static_dir.clone();
    Router::new()
        .route("/api/segment", post(segment_route))
        .route("/api/phantom", get(phantom_route))
        .route("/api/health", get(health_route))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(Arc::new(config))
        .fallback_service(ServeDir::new(static_dir))
}

/// Bind `config.addr` and serve until the process is stopped.
pub async fn serve(config: Config) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!(
        "segserve listening on http://{} (pixel budget {})",
        listener.local_addr()?,
        config.pixel_budget
    );
    axum::serve(listener, router(config)).await
}
