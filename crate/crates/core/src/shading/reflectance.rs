//! Reflectance energy normalization and residual assembly.

use crate::colorspace::{decode_unchecked, encode_unchecked, luminance, LinearRgb};
use crate::raster::{Raster, Rgb32, ShapeError};

/// Scale `min(1, 1 / (Y(albedo) + Y(specular) + eps))` that caps the summed
/// reflectance luminance below one.
#[inline]
pub fn reflectance_scale(albedo: LinearRgb, specular: LinearRgb, epsilon: f64) -> f64 {
    (1.0 / (luminance(albedo) + luminance(specular) + epsilon)).min(1.0)
}

/// Applies [`reflectance_scale`] to both colors. Returns `(albedo, specular, alpha)`.
pub fn normalize_pair(albedo: LinearRgb, specular: LinearRgb, epsilon: f64) -> (LinearRgb, LinearRgb, f64) {
    let alpha = reflectance_scale(albedo, specular, epsilon);
    (albedo.scale(alpha), specular.scale(alpha), alpha)
}

/// Per-pixel energy normalization of linear albedo and specular rasters.
pub fn normalize_reflectance(
    albedo_lin: &Raster<Rgb32>,
    specular_lin: &Raster<Rgb32>,
    epsilon: f64,
) -> Result<(Raster<Rgb32>, Raster<Rgb32>, Raster<f32>), ShapeError> {
    specular_lin.expect_dims("specular", albedo_lin.dims())?;
    let (w, h) = albedo_lin.dims();
    let mut a_out = Vec::with_capacity(w * h);
    let mut s_out = Vec::with_capacity(w * h);
    let mut alphas = Vec::with_capacity(w * h);
    for (a, s) in albedo_lin.pixels().iter().zip(specular_lin.pixels()) {
        let (a, s, alpha) = normalize_pair(to_linear(a), to_linear(s), epsilon);
        a_out.push(to_rgb32(a));
        s_out.push(to_rgb32(s));
        alphas.push(alpha as f32);
    }
    Ok((
        Raster::from_vec(w, h, a_out).expect("shape"),
        Raster::from_vec(w, h, s_out).expect("shape"),
        Raster::from_vec(w, h, alphas).expect("shape"),
    ))
}

/// `(albedo * E + specular * S) * mask`, element-wise.
pub fn compose_residual(
    diffuse: &Raster<Rgb32>,
    specular_irr: &Raster<Rgb32>,
    albedo_norm: &Raster<Rgb32>,
    specular_norm: &Raster<Rgb32>,
    mask: &Raster<bool>,
) -> Result<Raster<Rgb32>, ShapeError> {
    let dims = diffuse.dims();
    specular_irr.expect_dims("specular irradiance", dims)?;
    albedo_norm.expect_dims("albedo", dims)?;
    specular_norm.expect_dims("specular", dims)?;
    mask.expect_dims("mask", dims)?;
    let px = diffuse
        .pixels()
        .iter()
        .zip(specular_irr.pixels())
        .zip(albedo_norm.pixels().iter().zip(specular_norm.pixels()))
        .zip(mask.pixels())
        .map(|(((e, s), (a, b)), &m)| {
            if !m {
                return [0.0; 3];
            }
            let mut out = [0.0f32; 3];
            for c in 0..3 {
                out[c] = (a[c] as f64 * e[c] as f64 + b[c] as f64 * s[c] as f64) as f32;
            }
            out
        })
        .collect();
    Ok(Raster::from_vec(dims.0, dims.1, px).expect("shape"))
}

/// Channel-wise sRGB decode of a raster already known to be in `[0, 1]`.
pub fn decode_raster(r: &Raster<Rgb32>) -> Raster<Rgb32> {
    r.map(|p| p.map(|c| decode_unchecked(c as f64) as f32))
}

/// Channel-wise sRGB encode; values above 1 saturate.
pub fn encode_raster(r: &Raster<Rgb32>) -> Raster<Rgb32> {
    r.map(|p| p.map(|c| encode_unchecked((c as f64).max(0.0)) as f32))
}

fn to_linear(p: &Rgb32) -> LinearRgb {
    LinearRgb::new(p[0] as f64, p[1] as f64, p[2] as f64)
}

fn to_rgb32(c: LinearRgb) -> Rgb32 {
    [c.r as f32, c.g as f32, c.b as f32]
}
