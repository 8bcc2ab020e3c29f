//! Per-point quadrature over the emitter disk.

use std::f64::consts::PI;

use crate::lightgeom::{CosineLobe, DiskSample, GeometryError, LightParams};
use crate::math::Vec3;
use crate::visibility::{soft_visibility, DepthRaster, JitterKey, RayEnd, VisibilityConfig};

/// Direction toward the camera.
pub const VIEW_DIR: Vec3 = Vec3::Z;

/// Normalized Blinn-Phong lobe `(n+2)/(2 pi) [N.h]_+^n` with the half-vector
/// between `light_dir` and [`VIEW_DIR`]. Zero when the half-vector is undefined.
#[inline]
pub fn blinn_phong(normal: Vec3, light_dir: Vec3, shininess: f64) -> f64 {
    match (light_dir + VIEW_DIR).try_normalize() {
        Some(h) => {
            let c = normal.dot(h);
            if c > 0.0 {
                (shininess + 2.0) / (2.0 * PI) * c.powf(shininess)
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// A shaded point: center-relative pixel position with depth in `z`.
#[derive(Debug, Clone, Copy)]
pub struct Surface {
    pub position: Vec3,
    pub normal: Vec3,
    /// Stable pixel index for the visibility jitter.
    pub key: u64,
}

/// Screen-space occlusion context. `half_w`/`half_h` map center-relative
/// coordinates to raster coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Occlusion<'a> {
    pub depth: &'a DepthRaster,
    pub cfg: VisibilityConfig,
    pub half_w: f64,
    pub half_h: f64,
}

/// Disk-averaged scalar irradiance terms; color is applied afterwards.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiskAverage {
    pub diffuse: f64,
    pub specular: f64,
}

pub struct Integrator<'a> {
    pub samples: &'a [DiskSample],
    pub params: LightParams,
    pub lobe: CosineLobe,
    pub shininess: f64,
    pub specular: bool,
    pub occlusion: Option<Occlusion<'a>>,
}

impl<'a> Integrator<'a> {
    /// Calls `f(k, diffuse_k, specular_k)` for every disk sample, where the
    /// terms are `w_emit V [N.l]_+ / r^2` and `w_emit V S / r^2`.
    #[inline]
    fn visit(
        &self,
        s: &Surface,
        mut f: impl FnMut(usize, f64, f64),
    ) -> Result<(), GeometryError> {
        let p = &self.params;
        let base = Vec3::new(p.dx - s.position.x, p.dy - s.position.y, p.z0 + s.position.z);
        let stride = self.occlusion.map_or(1, |o| o.cfg.emitter_stride.max(1));
        let mut cached: Option<(usize, f64)> = None;
        for (k, d) in self.samples.iter().enumerate() {
            let v = Vec3::new(base.x + d.x, base.y + d.y, base.z);
            let r2 = v.dot(v);
            if !(r2 > 0.0) || !r2.is_finite() {
                return Err(GeometryError::Degenerate);
            }
            let inv_r = 1.0 / r2.sqrt();
            let l = v * inv_r;
            let w = self.lobe.weight_cos(l.z);
            let cos = s.normal.dot(l);
            if w == 0.0 || cos <= 0.0 {
                f(k, 0.0, 0.0);
                continue;
            }
            let spec = if self.specular { blinn_phong(s.normal, l, self.shininess) } else { 0.0 };
            let vis = match &self.occlusion {
                Some(o) if o.cfg.enabled => {
                    let group = k / stride;
                    match cached {
                        Some((g, val)) if g == group => val,
                        _ => {
                            let lead = &self.samples[group * stride];
                            let from = RayEnd {
                                x: s.position.x + o.half_w,
                                y: s.position.y + o.half_h,
                                depth: s.position.z,
                            };
                            let to = RayEnd {
                                x: p.dx + lead.x + o.half_w,
                                y: p.dy + lead.y + o.half_h,
                                depth: -p.z0,
                            };
                            let key = JitterKey { pixel: s.key, sample: (group * stride) as u64 };
                            let val = soft_visibility(from, to, o.depth, &o.cfg, key);
                            cached = Some((group, val));
                            val
                        }
                    }
                }
                _ => 1.0,
            };
            let g = w * vis * inv_r * inv_r;
            f(k, g * cos, g * spec);
        }
        Ok(())
    }

    /// Mean of the per-sample terms over the disk.
    pub fn average(&self, s: &Surface) -> Result<DiskAverage, GeometryError> {
        let mut sum = DiskAverage::default();
        self.visit(s, |_, d, sp| {
            sum.diffuse += d;
            sum.specular += sp;
        })?;
        let inv_n = 1.0 / self.samples.len() as f64;
        Ok(DiskAverage { diffuse: sum.diffuse * inv_n, specular: sum.specular * inv_n })
    }

    /// Diffuse mean and the variance of that mean, `s^2 / N`, with `s^2` the
    /// unbiased sample variance of the per-sample terms.
    pub fn diffuse_mean_variance(&self, s: &Surface) -> Result<(f64, f64), GeometryError> {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        self.visit(s, |k, d, _| {
            let n = (k + 1) as f64;
            let delta = d - mean;
            mean += delta / n;
            m2 += delta * (d - mean);
        })?;
        let n = self.samples.len() as f64;
        let var = if n > 1.0 { m2 / (n - 1.0) / n } else { 0.0 };
        Ok((mean, var))
    }
}
