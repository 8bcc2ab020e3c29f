use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fillight::lightgeom::{LightParamsRecord, ParamError};
use fillight::pfm;
use fillight::pipeline::{png, AssetBundle, AssetKind, IngestError};

use crate::render::{level_assets, render_image, render_residual, scaled_residual, Quality, RenderRequest};
use crate::store::{SceneHandle, StoreError};
use crate::AppState;

#[derive(Debug)]
pub enum ApiError {
    BadRequest { code: &'static str, message: String, asset: Option<AssetKind> },
    NotFound(String),
    Invalid(Vec<ParamError>),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest { code, message, asset } => {
                let mut body = json!({ "error": code, "message": message });
                if let Some(a) = asset {
                    body["asset"] = json!(a.name());
                }
                (StatusCode::BAD_REQUEST, body)
            }
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                json!({ "error": "unknown-scene", "message": format!("no scene {id}"), "scene_id": id }),
            ),
            ApiError::Invalid(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "invalid-params", "message": "invalid parameters", "fields": fields }),
            ),
            ApiError::Internal(message) => {
                log::error!("{message}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "internal", "message": message }))
            }
        };
        (status, Json(body)).into_response()
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let asset = match &e {
            IngestError::Missing { asset, .. } | IngestError::Decode { asset, .. } | IngestError::Io { asset, .. } => {
                Some(*asset)
            }
            _ => None,
        };
        ApiError::BadRequest { code: e.code(), message: e.to_string(), asset }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Ingest(e) => e.into(),
            StoreError::Io(e) => ApiError::Internal(e.to_string()),
        }
    }
}

/// Registration body: each asset file, base64 encoded.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterPayload {
    pub image: Option<String>,
    pub depth: Option<String>,
    pub normal: Option<String>,
    pub albedo: Option<String>,
    pub specular: Option<String>,
    pub mask: Option<String>,
}

impl RegisterPayload {
    pub fn from_bundle(b: &AssetBundle) -> Self {
        let enc = |k: AssetKind| b.get(k).map(|bytes| BASE64.encode(bytes));
        Self {
            image: enc(AssetKind::Image),
            depth: enc(AssetKind::Depth),
            normal: enc(AssetKind::Normal),
            albedo: enc(AssetKind::Albedo),
            specular: enc(AssetKind::Specular),
            mask: enc(AssetKind::Mask),
        }
    }

    fn field(&self, kind: AssetKind) -> Option<&String> {
        match kind {
            AssetKind::Image => self.image.as_ref(),
            AssetKind::Depth => self.depth.as_ref(),
            AssetKind::Normal => self.normal.as_ref(),
            AssetKind::Albedo => self.albedo.as_ref(),
            AssetKind::Specular => self.specular.as_ref(),
            AssetKind::Mask => self.mask.as_ref(),
        }
    }

    pub fn into_bundle(self) -> Result<AssetBundle, ApiError> {
        let mut bundle = AssetBundle::default();
        for kind in AssetKind::ALL {
            let Some(text) = self.field(kind) else {
                return Err(ApiError::BadRequest {
                    code: "missing-asset",
                    message: format!("missing {kind} asset"),
                    asset: Some(kind),
                });
            };
            let bytes = BASE64.decode(text.trim()).map_err(|e| ApiError::BadRequest {
                code: "invalid-base64",
                message: format!("{kind}: {e}"),
                asset: Some(kind),
            })?;
            bundle.set(kind, bytes);
        }
        Ok(bundle)
    }
}

async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let permit = state.permits.clone().acquire_owned().await.map_err(|e| ApiError::Internal(e.to_string()))?;
    tokio::task::spawn_blocking(move || {
        let _permit = permit;
        f()
    })
    .await
    .map_err(|e| ApiError::Internal(format!("render task: {e}")))?
}

pub async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": fillight::RENDERER_VERSION, "scenes": state.store.len() }))
}

pub async fn register(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let payload: RegisterPayload = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest {
        code: "invalid-json",
        message: e.to_string(),
        asset: None,
    })?;
    let bundle = payload.into_bundle()?;
    let store = state.store.clone();
    let (id, created) = blocking(&state, move || Ok(store.register(bundle)?)).await?;
    let handle = state.store.get(&id)?.ok_or_else(|| ApiError::Internal("scene vanished".into()))?;
    let (w, h) = handle.assets.dims();
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    let body = json!({
        "scene_id": id,
        "width": w,
        "height": h,
        "mask_coverage": handle.assets.mask_coverage(),
        "replaced_normals": handle.assets.replaced_normals,
        "pyramid": handle.pyramid.iter().map(|l| json!({"side": l.side, "width": l.assets.width(), "height": l.assets.height()})).collect::<Vec<_>>(),
    });
    Ok((status, Json(body)).into_response())
}

async fn lookup(state: &AppState, id: String) -> Result<Arc<SceneHandle>, ApiError> {
    let store = state.store.clone();
    let lookup_id = id.clone();
    blocking(state, move || Ok(store.get(&lookup_id)?)).await?.ok_or(ApiError::NotFound(id))
}

fn png_response(bytes: Vec<u8>, extra: HeaderMap) -> Response {
    let mut resp = (StatusCode::OK, [(header::CONTENT_TYPE, "image/png")], bytes).into_response();
    resp.headers_mut().extend(extra);
    resp
}

fn timing_headers(params: &LightParamsRecord, quality: Quality, started: Instant, dims: (usize, usize)) -> HeaderMap {
    let mut h = HeaderMap::new();
    let echo = serde_json::to_string(params).expect("params serialize");
    h.insert("x-params-echo", HeaderValue::from_str(&echo).expect("ascii json"));
    let ms = started.elapsed().as_secs_f64() * 1e3;
    h.insert("x-render-time-ms", HeaderValue::from_str(&format!("{ms:.3}")).expect("ascii"));
    let q = match quality {
        Quality::Preview => "preview",
        Quality::Full => "full",
    };
    h.insert("x-quality", HeaderValue::from_static(q));
    h.insert("x-image-size", HeaderValue::from_str(&format!("{}x{}", dims.0, dims.1)).expect("ascii"));
    h
}

pub async fn render(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let handle = lookup(&state, id).await?;
    let req: RenderRequest = serde_json::from_slice(&body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError::Invalid(vec![ParamError::new("body", e.to_string())]),
        _ => ApiError::BadRequest { code: "invalid-json", message: e.to_string(), asset: None },
    })?;
    let valid = req.validate().map_err(ApiError::Invalid)?;
    let settings = state.settings;
    let image = blocking(&state, move || {
        render_image(&handle, &valid, &settings).map_err(|e| ApiError::Internal(e.to_string()))
    })
    .await?;
    let headers = timing_headers(&req.params, valid.quality, started, image.dims());
    Ok(png_response(png::encode_rgb(&image), headers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterFormat {
    #[default]
    Png,
    Pfm,
}

#[derive(Debug, Deserialize)]
pub struct ResidualQuery {
    #[serde(default)]
    pub format: RasterFormat,
    #[serde(default)]
    pub quality: Quality,
    pub temperature_k: Option<f64>,
    pub theta_hp_deg: Option<f64>,
    pub z0: Option<f64>,
    pub d_lamp: Option<f64>,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    pub strength: Option<f64>,
    pub seed: Option<u64>,
}

impl ResidualQuery {
    fn request(&self) -> Result<RenderRequest, ApiError> {
        let mut missing = Vec::new();
        let mut need = |name: &'static str, v: Option<f64>| {
            v.unwrap_or_else(|| {
                missing.push(ParamError::new(name, "required"));
                f64::NAN
            })
        };
        let params = LightParamsRecord {
            temperature_k: need("temperature_k", self.temperature_k),
            theta_hp_deg: need("theta_hp_deg", self.theta_hp_deg),
            z0: need("z0", self.z0),
            d_lamp: need("d_lamp", self.d_lamp),
            dx: self.dx.unwrap_or(0.0),
            dy: self.dy.unwrap_or(0.0),
        };
        if !missing.is_empty() {
            return Err(ApiError::Invalid(missing));
        }
        Ok(RenderRequest { params, quality: self.quality, gamma: None, strength: self.strength, seed: self.seed })
    }
}

pub async fn residual(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ResidualQuery>,
) -> Result<Response, ApiError> {
    let started = Instant::now();
    let handle = lookup(&state, id).await?;
    let req = q.request()?;
    let valid = req.validate().map_err(ApiError::Invalid)?;
    let settings = state.settings;
    let delta = blocking(&state, move || {
        let (res, _) = render_residual(&handle, &valid, &settings).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(scaled_residual(&res.srgb, valid.strength))
    })
    .await?;
    let headers = timing_headers(&req.params, valid.quality, started, delta.dims());
    Ok(match q.format {
        RasterFormat::Png => png_response(png::encode_rgb(&delta), headers),
        RasterFormat::Pfm => {
            let mut resp =
                (StatusCode::OK, [(header::CONTENT_TYPE, "application/octet-stream")], pfm::encode_rgb(&delta))
                    .into_response();
            resp.headers_mut().extend(headers);
            resp
        }
    })
}

#[derive(Debug, Deserialize)]
pub struct OriginalQuery {
    pub quality: Option<Quality>,
}

pub async fn original(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<OriginalQuery>,
) -> Result<Response, ApiError> {
    let handle = lookup(&state, id).await?;
    let quality = q.quality.unwrap_or(Quality::Full);
    let (assets, _) = level_assets(&handle, quality, &state.settings);
    Ok(png_response(png::encode_rgb(&assets.image), HeaderMap::new()))
}
