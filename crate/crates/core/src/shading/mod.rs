//! Fill-light shading.
//!
//! Per pixel the disk is integrated with its Fibonacci samples:
//!
//! ```text
//! E = gain/N * sum_k c(T) w_emit V [N.l]_+ / r^2
//! S = gain/N * sum_k c(T) w_emit V (n+2)/(2 pi) [N.h]_+^n / r^2
//! ```
//!
//! Reflectances are decoded to linear, energy-capped, and combined into the
//! residual `(albedo E + specular S) * mask`, then re-encoded to sRGB.
//!
//! Irradiance is expressed relative to a reference: an on-axis point lamp at a
//! distance of one image height lights a facing pixel to linear mid-gray
//! (sRGB 0.5) when `gain` is 1. Because every length is in pixels this keeps
//! renders of one scene comparable across resolutions.

mod kernel;
mod reflectance;
mod scene;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::{blinn_phong, DiskAverage, Integrator, Occlusion, Surface, VIEW_DIR};
pub use reflectance::{
    compose_residual, decode_raster, encode_raster, normalize_pair, normalize_reflectance,
    reflectance_scale,
};
pub use scene::{renormalize_normals, SceneAssets, SceneError, DEFAULT_NORMAL};

use crate::colorspace::{cct_to_xyz, xyz_to_linear_rgb, LinearRgb, XyzColor};
use crate::lightgeom::{sample_disk, CosineLobe, GeometryError, LightParams, ParamError};
use crate::math::Vec3;
use crate::raster::{Raster, Rgb32, ShapeError};
use crate::visibility::{VisibilityConfig, VisibilityError};

/// Linear value of sRGB 0.5.
pub const MID_GRAY_LINEAR: f64 = 0.214_041_140_482_232_55;

/// Carrier weight of the residual in training targets.
pub const RESIDUAL_CARRIER_WEIGHT: f64 = 0.6;
/// Allowed range of the carrier scale applied to the original image.
pub const GAMMA_RANGE: (f64, f64) = (0.2, 0.4);

#[derive(Debug, Error)]
pub enum ShadingError {
    #[error("invalid light parameters: {0}")]
    Params(#[from] ParamError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("render config: {0}")]
    Config(String),
    #[error(transparent)]
    Visibility(#[from] VisibilityError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("gamma {0} outside [0.2, 0.4]")]
    Gamma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Emitter samples per pixel.
    pub n_samples: usize,
    /// Blinn-Phong exponent.
    pub shininess: f64,
    /// Stabilizer of the reflectance energy cap.
    pub epsilon: f64,
    pub visibility: VisibilityConfig,
    pub specular_enabled: bool,
    /// Global irradiance multiplier on top of the mid-gray reference.
    pub gain: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            n_samples: 2048,
            shininess: 32.0,
            epsilon: 1e-4,
            visibility: VisibilityConfig::default(),
            specular_enabled: true,
            gain: 1.0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), ShadingError> {
        if self.n_samples == 0 {
            return Err(ShadingError::Config("n_samples must be at least 1".into()));
        }
        if !(self.shininess > 0.0 && self.shininess.is_finite()) {
            return Err(ShadingError::Config("shininess must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ShadingError::Config("epsilon must be positive".into()));
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(ShadingError::Config("gain must be non-negative".into()));
        }
        self.visibility.validate()?;
        Ok(())
    }

    /// Irradiance scale for scenes whose reference length is `reference_px`.
    pub fn irradiance_scale(&self, reference_px: f64) -> f64 {
        self.gain * MID_GRAY_LINEAR * reference_px * reference_px
    }
}

/// The rendered fill-light contribution. Zero outside the face mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FillResidual {
    pub linear: Raster<Rgb32>,
    pub srgb: Raster<Rgb32>,
}

/// Colorless disk averages for every pixel, already multiplied by the
/// irradiance scale. Pixels outside the mask are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceFields {
    pub diffuse: Raster<f64>,
    pub specular: Raster<f64>,
}

impl IrradianceFields {
    /// Multiplies by a light color given in XYZ. The map is linear, so this
    /// equals integrating the color per sample.
    pub fn colorize(&self, color: XyzColor) -> (Raster<Rgb32>, Raster<Rgb32>) {
        let rgb = xyz_to_linear_rgb(color);
        let tint = |v: &f64| -> Rgb32 { [(rgb.r * v) as f32, (rgb.g * v) as f32, (rgb.b * v) as f32] };
        (self.diffuse.map(tint), self.specular.map(tint))
    }
}

pub(crate) fn surface_at(scene: &SceneAssets, x: usize, y: usize) -> Surface {
    let (w, h) = scene.dims();
    Surface {
        position: Vec3::new(
            x as f64 + 0.5 - 0.5 * w as f64,
            y as f64 + 0.5 - 0.5 * h as f64,
            scene.depth.at(x, y),
        ),
        normal: Vec3::from(scene.normals.get(x, y)),
        key: (y * w + x) as u64,
    }
}

fn check_inputs(params: &LightParams, cfg: &RenderConfig) -> Result<(), ShadingError> {
    params.validate()?;
    cfg.validate()
}

fn scene_integrator<'a>(
    scene: &'a SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
    samples: &'a [crate::lightgeom::DiskSample],
) -> Result<Integrator<'a>, ShadingError> {
    Ok(Integrator {
        samples,
        params: *params,
        lobe: CosineLobe::new(params.theta_hp)?,
        shininess: cfg.shininess,
        specular: cfg.specular_enabled,
        occlusion: Some(Occlusion {
            depth: &scene.depth,
            cfg: cfg.visibility,
            half_w: 0.5 * scene.width() as f64,
            half_h: 0.5 * scene.height() as f64,
        }),
    })
}

/// Scalar diffuse and specular irradiance for every masked pixel.
pub fn irradiance_fields(
    scene: &SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
) -> Result<IrradianceFields, ShadingError> {
    check_inputs(params, cfg)?;
    let samples = sample_disk(params.d_lamp, cfg.n_samples)?;
    let integrator = scene_integrator(scene, params, cfg, &samples)?;
    let scale = cfg.irradiance_scale(scene.height() as f64);
    let (w, h) = scene.dims();
    let mask = scene.mask.pixels();
    let values = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if !mask[i] {
                return Ok(DiskAverage::default());
            }
            let avg = integrator.average(&surface_at(scene, i % w, i / w))?;
            Ok(DiskAverage { diffuse: avg.diffuse * scale, specular: avg.specular * scale })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    Ok(IrradianceFields {
        diffuse: Raster::from_vec(w, h, values.iter().map(|a| a.diffuse).collect()).expect("shape"),
        specular: Raster::from_vec(w, h, values.iter().map(|a| a.specular).collect()).expect("shape"),
    })
}

/// Per-pixel diffuse estimate and the variance of that estimate.
pub fn diffuse_statistics(
    scene: &SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
) -> Result<Raster<(f64, f64)>, ShadingError> {
    check_inputs(params, cfg)?;
    let samples = sample_disk(params.d_lamp, cfg.n_samples)?;
    let integrator = scene_integrator(scene, params, cfg, &samples)?;
    let scale = cfg.irradiance_scale(scene.height() as f64);
    let (w, h) = scene.dims();
    let mask = scene.mask.pixels();
    let values = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if !mask[i] {
                return Ok((0.0, 0.0));
            }
            let (m, v) = integrator.diffuse_mean_variance(&surface_at(scene, i % w, i / w))?;
            Ok((m * scale, v * scale * scale))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    Ok(Raster::from_vec(w, h, values).expect("shape"))
}

/// Linear diffuse irradiance `E` per pixel.
pub fn diffuse_irradiance(
    scene: &SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
) -> Result<Raster<Rgb32>, ShadingError> {
    let fields = irradiance_fields(scene, params, cfg)?;
    Ok(fields.colorize(cct_to_xyz(params.temperature)).0)
}

/// Linear specular irradiance `S` per pixel.
pub fn specular_irradiance(
    scene: &SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
) -> Result<Raster<Rgb32>, ShadingError> {
    let cfg = RenderConfig { specular_enabled: true, ..*cfg };
    let fields = irradiance_fields(scene, params, &cfg)?;
    Ok(fields.colorize(cct_to_xyz(params.temperature)).1)
}

pub fn residual_to_srgb(linear: &Raster<Rgb32>) -> Raster<Rgb32> {
    encode_raster(linear)
}

/// Carrier target `gamma * image + 0.6 * residual`, both sRGB.
pub fn compose_target(
    image: &Raster<Rgb32>,
    residual_srgb: &Raster<Rgb32>,
    gamma: f64,
) -> Result<Raster<Rgb32>, ShadingError> {
    if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&gamma) {
        return Err(ShadingError::Gamma(gamma));
    }
    residual_srgb.expect_dims("residual", image.dims())?;
    let px = image
        .pixels()
        .iter()
        .zip(residual_srgb.pixels())
        .map(|(i, r)| {
            let mut out = [0.0f32; 3];
            for c in 0..3 {
                out[c] = (gamma * i[c] as f64 + RESIDUAL_CARRIER_WEIGHT * r[c] as f64) as f32;
            }
            out
        })
        .collect();
    Ok(Raster::from_vec(image.width(), image.height(), px).expect("shape"))
}

/// Assembles the residual from precomputed irradiance fields.
pub fn shade_fields(
    scene: &SceneAssets,
    fields: &IrradianceFields,
    color: XyzColor,
    epsilon: f64,
) -> Result<FillResidual, ShadingError> {
    let (e, s) = fields.colorize(color);
    let (albedo, specular, _) =
        normalize_reflectance(&decode_raster(&scene.albedo), &decode_raster(&scene.specular), epsilon)?;
    let linear = compose_residual(&e, &s, &albedo, &specular, &scene.mask)?;
    let srgb = residual_to_srgb(&linear);
    Ok(FillResidual { linear, srgb })
}

/// Full render: disk sampling, irradiance with visibility, reflectance
/// normalization, masking and sRGB encoding.
pub fn render_fill_light(
    scene: &SceneAssets,
    params: &LightParams,
    cfg: &RenderConfig,
) -> Result<FillResidual, ShadingError> {
    let fields = irradiance_fields(scene, params, cfg)?;
    shade_fields(scene, &fields, cct_to_xyz(params.temperature), cfg.epsilon)
}

/// Mean linear color of the residual over masked pixels.
pub fn masked_mean(residual: &Raster<Rgb32>, mask: &Raster<bool>) -> LinearRgb {
    let mut acc = [0.0f64; 3];
    let mut n = 0usize;
    for (p, &m) in residual.pixels().iter().zip(mask.pixels()) {
        if m {
            n += 1;
            for c in 0..3 {
                acc[c] += p[c] as f64;
            }
        }
    }
    let n = n.max(1) as f64;
    LinearRgb::new(acc[0] / n, acc[1] / n, acc[2] / n)
}
