//! Screen-space soft visibility.
//!
//! A ray from a surface point to an emitter sample is projected into the image
//! and marched against the depth raster. Each march sample contributes an
//! occlusion probability `o = smoothstep((ray_depth - scene_depth - bias) /
//! softness)` and the visibility is the transmittance `prod(1 - o)`.
//!
//! Depth grows away from the lamp. The march spans the part of the segment
//! that lies inside the raster; samples are spaced evenly over it and
//! jittered by a hash of (pixel, emitter sample, seed, step). Steps that
//! straddle an occluder are re-probed at pixel centers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::Raster;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VisibilityError {
    #[error("visibility config: {0}")]
    Config(String),
    #[error("depth raster contains a non-finite value at ({x}, {y})")]
    NonFiniteDepth { x: usize, y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisibilityConfig {
    /// March samples per ray.
    pub steps: usize,
    /// Jitter of each sample along the ray, as a fraction of one step.
    pub jitter_amplitude: f64,
    /// Depth difference (pixels) over which occlusion ramps from 0 to 1.
    pub occlusion_softness: f64,
    /// Depth bias (pixels) against self-occlusion.
    pub bias: f64,
    pub seed: u64,
    /// Evaluate visibility only for every `emitter_stride`-th disk sample and
    /// reuse it for the following ones. 1 disables the shortcut.
    pub emitter_stride: usize,
    /// Skip visibility entirely (V = 1).
    pub enabled: bool,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        Self {
            steps: 24,
            jitter_amplitude: 0.5,
            occlusion_softness: 4.0,
            bias: 0.5,
            seed: 0,
            emitter_stride: 1,
            enabled: true,
        }
    }
}

impl VisibilityConfig {
    pub fn validate(&self) -> Result<(), VisibilityError> {
        let bad = |m: &str| Err(VisibilityError::Config(m.to_string()));
        if self.steps < 2 {
            return bad("steps must be at least 2");
        }
        if !(0.0..1.0).contains(&self.jitter_amplitude) {
            return bad("jitter_amplitude must lie in [0, 1)");
        }
        if !(self.occlusion_softness > 0.0 && self.occlusion_softness.is_finite()) {
            return bad("occlusion_softness must be positive");
        }
        if !(self.bias >= 0.0 && self.bias.is_finite()) {
            return bad("bias must be non-negative");
        }
        if self.emitter_stride == 0 {
            return bad("emitter_stride must be at least 1");
        }
        Ok(())
    }
}

/// Depth raster in pixels, with its shallowest value cached.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    raster: Raster<f32>,
    min_depth: f64,
}

impl DepthRaster {
    pub fn new(raster: Raster<f32>) -> Result<Self, VisibilityError> {
        if let Some(i) = raster.pixels().iter().position(|v| !v.is_finite()) {
            let w = raster.width().max(1);
            return Err(VisibilityError::NonFiniteDepth { x: i % w, y: i / w });
        }
        let min_depth = raster.min_max().0 as f64;
        Ok(Self { raster, min_depth })
    }

    pub fn raster(&self) -> &Raster<f32> {
        &self.raster
    }

    pub fn min_depth(&self) -> f64 {
        self.min_depth
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    /// Depth at the center of pixel `(x, y)`.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.raster.get(x, y) as f64
    }
}

/// A ray endpoint in raster coordinates (pixel `(i, j)` spans `[i, i+1)`)
/// with its depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayEnd {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

/// Identifies one (pixel, emitter sample) pair for the jitter hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JitterKey {
    pub pixel: u64,
    pub sample: u64,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * (3.0 - 2.0 * u)
    }
}

/// Parametric interval of the segment `a + t (b - a)`, `t` in `[0, 1]`, that
/// lies inside `[0, w) x [0, h)`.
fn clip_to_raster(a: RayEnd, b: RayEnd, w: f64, h: f64) -> Option<(f64, f64)> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (p, d, size) in [(a.x, b.x - a.x, w), (a.y, b.y - a.y, h)] {
        if d == 0.0 {
            if p < 0.0 || p >= size {
                return None;
            }
        } else {
            let t0 = (0.0 - p) / d;
            let t1 = (size - p) / d;
            let (near, far) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
            lo = lo.max(near);
            hi = hi.min(far);
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Geometry of one march: the projected segment and the occlusion law.
struct March<'a> {
    from: RayEnd,
    delta: (f64, f64, f64),
    depth: &'a DepthRaster,
    bias: f64,
    inv_soft: f64,
}

impl March<'_> {
    /// Ray depth, scene depth and occlusion at parameter `t`.
    #[inline]
    fn probe(&self, t: f64) -> (f64, Option<f64>, f64) {
        let ray = self.from.depth + t * self.delta.2;
        let x = self.from.x + t * self.delta.0;
        let y = self.from.y + t * self.delta.1;
        match self.depth.raster.bilinear(x, y) {
            Some(scene) => (ray, Some(scene), smoothstep((ray - scene - self.bias) * self.inv_soft)),
            None => (ray, None, 0.0),
        }
    }

    /// Transmittance of `(ta, tb]` from probes at the pixel centers of the
    /// major axis, each weighted by its share of one coarse step.
    fn refine(&self, ta: f64, tb: f64, step: f64) -> Option<f64> {
        let (dx, dy, _) = self.delta;
        let (origin, d) = if dx.abs() >= dy.abs() { (self.from.x, dx) } else { (self.from.y, dy) };
        if d == 0.0 {
            return None;
        }
        let weight = 1.0 / (d.abs() * step);
        let (ca, cb) = (origin + ta * d, origin + tb * d);
        // Centers k + 0.5 with c in (ca, cb] along the direction of travel.
        let (first, last) = if d > 0.0 {
            ((ca - 0.5).floor() as i64 + 1, (cb - 0.5).floor() as i64)
        } else {
            ((ca - 0.5).ceil() as i64 - 1, (cb - 0.5).ceil() as i64)
        };
        let count = if d > 0.0 { last - first + 1 } else { first - last + 1 };
        let dir = d.signum() as i64;
        let mut transmittance = 1.0;
        for n in 0..count.max(0) {
            let k = first + n * dir;
            let t = (k as f64 + 0.5 - origin) / d;
            let o = self.probe(t).2;
            if o >= 1.0 {
                return Some(0.0);
            }
            if o > 0.0 {
                transmittance *= (1.0 - o).powf(weight);
            }
        }
        Some(transmittance)
    }
}

/// Soft visibility between a surface point and an emitter point, in `[0, 1]`.
///
/// Step intervals that straddle an occluder (positive occlusion at either end
/// or a depth jump wider than the softness) are re-probed at pixel centers,
/// so the shadow edge does not depend on where the jittered samples fall.
pub fn soft_visibility(
    from: RayEnd,
    to: RayEnd,
    depth: &DepthRaster,
    cfg: &VisibilityConfig,
    key: JitterKey,
) -> f64 {
    // Once the ray is above the shallowest surface no later sample can occlude.
    let clear_below = depth.min_depth + cfg.bias;
    let rising = to.depth <= from.depth;
    if rising && from.depth <= clear_below {
        return 1.0;
    }
    let Some((t_lo, t_hi)) =
        clip_to_raster(from, to, depth.width() as f64, depth.height() as f64)
    else {
        return 1.0;
    };

    let march = March {
        from,
        delta: (to.x - from.x, to.y - from.y, to.depth - from.depth),
        depth,
        bias: cfg.bias,
        inv_soft: 1.0 / cfg.occlusion_softness,
    };
    let step = (t_hi - t_lo) / (cfg.steps + 1) as f64;
    let base = splitmix(cfg.seed ^ splitmix(key.pixel ^ splitmix(key.sample)));
    let mut transmittance = 1.0;
    let (mut prev_t, mut prev_scene, mut prev_o) = {
        let (_, scene, o) = march.probe(t_lo);
        (t_lo, scene, o)
    };
    for i in 0..cfg.steps {
        let jitter = if cfg.jitter_amplitude > 0.0 {
            (unit_interval(splitmix(base.wrapping_add(i as u64))) - 0.5) * cfg.jitter_amplitude
        } else {
            0.0
        };
        let t = t_lo + step * (i as f64 + 1.0 + jitter);
        let (ray, scene, o) = march.probe(t);
        let jump = matches!((prev_scene, scene), (Some(a), Some(b)) if (a - b).abs() > cfg.occlusion_softness);
        let factor = if prev_o > 0.0 || o > 0.0 || jump {
            march.refine(prev_t, t, step).unwrap_or(1.0 - o)
        } else {
            1.0 - o
        };
        transmittance *= factor;
        if transmittance <= 0.0 || (rising && ray <= clear_below) {
            break;
        }
        (prev_t, prev_scene, prev_o) = (t, scene, o);
    }
    transmittance.clamp(0.0, 1.0)
}

/// Visibility of a single emitter point from every pixel of the raster.
pub fn visibility_raster(depth: &DepthRaster, emitter: RayEnd, cfg: &VisibilityConfig) -> Raster<f32> {
    let (w, h) = (depth.width(), depth.height());
    let values: Vec<f32> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let from = RayEnd { x: x as f64 + 0.5, y: y as f64 + 0.5, depth: depth.at(x, y) };
            soft_visibility(from, emitter, depth, cfg, JitterKey { pixel: i as u64, sample: 0 }) as f32
        })
        .collect();
    Raster::from_vec(w, h, values).expect("shape")
}
