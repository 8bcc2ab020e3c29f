use serde::{Deserialize, Serialize};

use fillight::lightgeom::{LightParamsRecord, ParamError};
use fillight::raster::{Raster, Rgb32};
use fillight::shading::{compose_target, render_fill_light, ShadingError, GAMMA_RANGE};
use fillight::{FillResidual, LightParams, RenderConfig, SceneAssets};

use crate::store::SceneHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    #[default]
    Preview,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    /// Pyramid level used for previews.
    pub preview_side: usize,
    pub preview_samples: usize,
    /// Visibility jitter seed used when a request does not pick one.
    pub default_seed: u64,
    pub full: RenderConfig,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { preview_side: 128, preview_samples: 256, default_seed: 0, full: RenderConfig::default() }
    }
}

/// Body of `POST /scenes/{id}/render`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub params: LightParamsRecord,
    #[serde(default)]
    pub quality: Quality,
    /// Renders the carrier target `gamma * I + 0.6 * residual` instead.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Residual gain, default 1.
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A request with validated fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidRequest {
    pub params: LightParams,
    pub quality: Quality,
    pub gamma: Option<f64>,
    pub strength: f64,
    pub seed: Option<u64>,
}

impl RenderRequest {
    /// Every invalid field is reported, not just the first.
    pub fn validate(&self) -> Result<ValidRequest, Vec<ParamError>> {
        let mut errs = self.params.field_errors();
        if let Some(g) = self.gamma {
            if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&g) {
                errs.push(ParamError::new("gamma", format!("must lie in [0.2, 0.4], got {g}")));
            }
        }
        let strength = self.strength.unwrap_or(1.0);
        if !(strength >= 0.0 && strength.is_finite()) {
            errs.push(ParamError::new("strength", format!("must be finite and non-negative, got {strength}")));
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let params = LightParams::try_from(self.params).map_err(|e| vec![e])?;
        Ok(ValidRequest { params, quality: self.quality, gamma: self.gamma, strength, seed: self.seed })
    }
}

/// Assets and length scale a quality level renders at.
pub fn level_assets<'a>(handle: &'a SceneHandle, quality: Quality, settings: &RenderSettings) -> (&'a SceneAssets, f64) {
    match quality {
        Quality::Full => (&handle.assets, 1.0),
        Quality::Preview => handle
            .level(settings.preview_side)
            .map(|l| (&l.assets, l.scale))
            .unwrap_or_else(|| {
                let l = &handle.pyramid[0];
                (&l.assets, l.scale)
            }),
    }
}

/// Renders the residual for a validated request. Light parameters are given
/// in full-resolution pixels and rescaled to the level.
pub fn render_residual<'a>(
    handle: &'a SceneHandle,
    req: &ValidRequest,
    settings: &RenderSettings,
) -> Result<(FillResidual, &'a SceneAssets), ShadingError> {
    let (assets, scale) = level_assets(handle, req.quality, settings);
    let mut cfg = settings.full;
    if req.quality == Quality::Preview {
        cfg.n_samples = settings.preview_samples;
    }
    cfg.visibility.seed = req.seed.unwrap_or(settings.default_seed);
    let residual = render_fill_light(assets, &req.params.scaled(scale), &cfg)?;
    Ok((residual, assets))
}

/// `clamp(image + strength * residual)` in sRGB.
pub fn composite(image: &Raster<Rgb32>, residual_srgb: &Raster<Rgb32>, strength: f64) -> Raster<Rgb32> {
    let s = strength as f32;
    let px = image
        .pixels()
        .iter()
        .zip(residual_srgb.pixels())
        .map(|(i, r)| [0, 1, 2].map(|c| (i[c] + s * r[c]).clamp(0.0, 1.0)))
        .collect();
    Raster::from_vec(image.width(), image.height(), px).expect("matching shapes")
}

pub fn scaled_residual(residual_srgb: &Raster<Rgb32>, strength: f64) -> Raster<Rgb32> {
    let s = strength as f32;
    residual_srgb.map(|p| p.map(|c| c * s))
}

/// The image returned by the render endpoint.
pub fn render_image(
    handle: &SceneHandle,
    req: &ValidRequest,
    settings: &RenderSettings,
) -> Result<Raster<Rgb32>, ShadingError> {
    let (residual, assets) = render_residual(handle, req, settings)?;
    let delta = scaled_residual(&residual.srgb, req.strength);
    match req.gamma {
        Some(g) => compose_target(&assets.image, &delta, g),
        None => Ok(composite(&assets.image, &residual.srgb, req.strength)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> LightParamsRecord {
        LightParamsRecord { temperature_k: 5600.0, theta_hp_deg: 40.0, z0: 800.0, d_lamp: 300.0, dx: 0.0, dy: 0.0 }
    }

    #[test]
    fn all_field_errors_reported() {
        let req = RenderRequest {
            params: LightParamsRecord { temperature_k: 100.0, z0: -1.0, ..record() },
            quality: Quality::Preview,
            gamma: Some(0.9),
            strength: Some(-1.0),
            seed: None,
        };
        let fields: Vec<_> = req.validate().unwrap_err().iter().map(|e| e.field).collect();
        assert_eq!(fields, ["temperature_k", "z0", "gamma", "strength"]);
    }

    #[test]
    fn request_json_defaults() {
        let req: RenderRequest = serde_json::from_str(
            r#"{"params":{"temperature_k":5600,"theta_hp_deg":40,"z0":800,"d_lamp":300,"dx":0,"dy":0}}"#,
        )
        .unwrap();
        let v = req.validate().unwrap();
        assert_eq!(v.quality, Quality::Preview);
        assert_eq!(v.strength, 1.0);
        assert!(v.gamma.is_none());
    }

    #[test]
    fn zero_strength_composite_is_identity() {
        let img = Raster::from_fn(3, 2, |x, y| [x as f32 / 3.0, y as f32, 0.5]);
        let res = Raster::filled(3, 2, [0.7f32; 3]);
        assert_eq!(composite(&img, &res, 0.0), img);
        assert!(composite(&img, &res, 5.0).pixels().iter().flatten().all(|&c| c <= 1.0));
    }
}
