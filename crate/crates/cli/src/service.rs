//! HTTP JSON API plus an optional static mount for the viewer bundle.
//!
//! `GET /api/presets`, `POST /api/analyze`, `POST /api/sweep`. Validation
//! errors are 400 `{error, field}`, unknown presets 422, unknown routes 404.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::Router;
use llm_roofline::{Error, PresetRegistry};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::{analyze_value, report_json, series_json, sweep_value};

type Registry = Arc<PresetRegistry>;

pub fn router(registry: Registry, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/presets", get(presets))
        .route("/api/analyze", post(analyze))
        .route("/api/sweep", post(sweep))
        .route("/api/{*rest}", any(not_found))
        .with_state(registry);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(err: &Error) -> Response {
    let (status, body) = if err.is_unknown_preset() {
        let known = err.candidates().unwrap_or_default();
        (
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({"error": err.kind(), "field": err.field(), "candidates": known}),
        )
    } else {
        (StatusCode::BAD_REQUEST, json!({"error": err.kind(), "field": err.field()}))
    };
    json_response(status, format!("{body}\n"))
}

async fn not_found() -> Response {
    json_response(
        StatusCode::NOT_FOUND,
        format!("{}\n", json!({"error": "NotFound", "field": null})),
    )
}

async fn presets(State(registry): State<Registry>) -> Response {
    let body = json!({"models": registry.model_names(), "hardware": registry.hardware_names()});
    json_response(StatusCode::OK, format!("{body}\n"))
}

fn parse_body(body: &[u8]) -> Result<Value, Error> {
    serde_json::from_slice(body).map_err(|e| Error::Parse(e.to_string()))
}

async fn analyze(State(registry): State<Registry>, body: Bytes) -> Response {
    let result = tokio::task::spawn_blocking(move || {
        let v = parse_body(&body)?;
        analyze_value(&v, &registry).map(|r| report_json(&r))
    })
    .await
    .expect("analysis task does not panic");
    match result {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => error_response(&e),
    }
}

async fn sweep(State(registry): State<Registry>, body: Bytes) -> Response {
    let result = tokio::task::spawn_blocking(move || {
        let v = parse_body(&body)?;
        sweep_value(&v, &registry).map(|s| series_json(&s))
    })
    .await
    .expect("sweep task does not panic");
    match result {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => error_response(&e),
    }
}

/// Binds `host:port` and serves until the process is stopped.
pub async fn serve(registry: PresetRegistry, host: &str, port: u16, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(registry), static_dir)).await
}
