//! HTTP preview service for interactive fill-light placement.
//!
//! | Method | Path | |
//! |---|---|---|
//! | `POST` | `/scenes` | register a JSON bundle of base64 assets, returns the content-hash id |
//! | `POST` | `/scenes/{id}/render` | composited preview or full render, PNG |
//! | `GET` | `/scenes/{id}/residual` | residual alone, `format=png` or `pfm` |
//! | `GET` | `/scenes/{id}/original` | the registered image, PNG |
//! | `GET` | `/healthz` | liveness |
//!
//! Light parameters at this boundary are in full-resolution pixels with the
//! beam angle in degrees. Previews render the 128 px pyramid level with the
//! parameters rescaled to it.

pub mod api;
pub mod render;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use fillight::pipeline::IngestOptions;

pub use api::RegisterPayload;
pub use render::{Quality, RenderRequest, RenderSettings};
pub use store::{SceneHandle, SceneStore};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_scenes: usize,
    /// Evicted scenes are written here and scenes found here can be
    /// requested by directory name.
    pub assets_dir: Option<PathBuf>,
    pub settings: RenderSettings,
    pub max_body_bytes: usize,
    /// Concurrent render jobs.
    pub workers: usize,
    pub ingest: IngestOptions,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_scenes: 32,
            assets_dir: None,
            settings: RenderSettings::default(),
            max_body_bytes: 256 << 20,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            ingest: IngestOptions::default(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SceneStore>,
    pub settings: RenderSettings,
    permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(cfg: &ServiceConfig) -> Self {
        Self {
            store: Arc::new(SceneStore::new(cfg.max_scenes, cfg.assets_dir.clone(), cfg.ingest)),
            settings: cfg.settings,
            permits: Arc::new(Semaphore::new(cfg.workers.max(1))),
        }
    }
}

pub fn router(cfg: &ServiceConfig) -> Router {
    router_with_state(AppState::new(cfg), cfg.max_body_bytes)
}

pub fn router_with_state(state: AppState, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/healthz", get(api::healthz))
        .route("/scenes", post(api::register))
        .route("/scenes/{id}/render", post(api::render))
        .route("/scenes/{id}/residual", get(api::residual))
        .route("/scenes/{id}/original", get(api::original))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(listener: TcpListener, cfg: ServiceConfig) -> std::io::Result<()> {
    if let Some(dir) = &cfg.assets_dir {
        std::fs::create_dir_all(dir)?;
    }
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(&cfg)).await
}

/// Binds `addr` and serves.
pub async fn serve_addr(addr: SocketAddr, cfg: ServiceConfig) -> std::io::Result<()> {
    serve(TcpListener::bind(addr).await?, cfg).await
}
