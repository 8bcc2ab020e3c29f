//! Planar supervision targets: the lamp shining on a flat plane facing it.
//!
//! The plane sits at depth 0 with normals toward the lamp, no occlusion and
//! no albedo. It spans a square window of `window` pixels centered on the
//! image origin, sampled at `resolution` x `resolution`. Alongside the
//! irradiance, every plane point gets the unit 2D direction from the
//! projected disk center `(dx, dy)` to that point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::light_color;
use crate::lightgeom::{sample_disk, CosineLobe, LightParams};
use crate::math::Vec3;
use crate::raster::Raster;
use crate::shading::{Integrator, ShadingError, Surface, MID_GRAY_LINEAR};

/// How the direction field occupies the last three target channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    /// `[r, g, b, ux, uy, 0]`, the sixth channel a constant pad.
    #[default]
    PaddedDirection,
    /// `[r, g, b, ux, uy, uz]` with `uz = 0`.
    Direction3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanarConfig {
    pub resolution: usize,
    /// Side of the plane window, pixels.
    pub window: f64,
    pub n_samples: usize,
    /// Length at which an on-axis lamp gives mid-gray irradiance.
    pub reference_length: f64,
    pub gain: f64,
    pub layout: ChannelLayout,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        Self {
            resolution: 64,
            window: 4096.0,
            n_samples: 512,
            reference_length: 1024.0,
            gain: 1.0,
            layout: ChannelLayout::PaddedDirection,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTargets {
    /// Linear RGB irradiance on the plane.
    pub irradiance: Raster<[f64; 3]>,
    /// Unit direction from the disk-center projection, zero at that point.
    pub direction: Raster<[f64; 2]>,
}

impl PlanarTargets {
    pub fn resolution(&self) -> (usize, usize) {
        self.irradiance.dims()
    }

    /// Direction field with an explicit zero z component.
    pub fn direction3(&self) -> Raster<[f64; 3]> {
        self.direction.map(|d| [d[0], d[1], 0.0])
    }
}

/// Center-relative plane coordinate of cell `i` along an axis.
#[inline]
pub fn plane_coord(i: usize, resolution: usize, window: f64) -> f64 {
    (i as f64 + 0.5) / resolution as f64 * window - 0.5 * window
}

pub fn render_planar_targets(
    params: &LightParams,
    cfg: &PlanarConfig,
) -> Result<PlanarTargets, ShadingError> {
    params.validate()?;
    if cfg.resolution < 8 {
        return Err(ShadingError::Config("planar resolution must be at least 8".into()));
    }
    if !(cfg.window > 0.0 && cfg.window.is_finite()) {
        return Err(ShadingError::Config("planar window must be positive".into()));
    }
    let samples = sample_disk(params.d_lamp, cfg.n_samples)?;
    let integrator = Integrator {
        samples: &samples,
        params: *params,
        lobe: CosineLobe::new(params.theta_hp)?,
        shininess: 1.0,
        specular: false,
        occlusion: None,
    };
    let color = light_color(params.temperature);
    let scale = cfg.gain * MID_GRAY_LINEAR * cfg.reference_length * cfg.reference_length;
    let res = cfg.resolution;
    let cells = (0..res * res)
        .into_par_iter()
        .map(|i| {
            let x = plane_coord(i % res, res, cfg.window);
            let y = plane_coord(i / res, res, cfg.window);
            let surface = Surface { position: Vec3::new(x, y, 0.0), normal: Vec3::Z, key: i as u64 };
            let e = integrator.average(&surface)?.diffuse * scale;
            let (ux, uy) = (x - params.dx, y - params.dy);
            let len = ux.hypot(uy);
            let dir = if len > 0.0 { [ux / len, uy / len] } else { [0.0, 0.0] };
            Ok(([color.r * e, color.g * e, color.b * e], dir))
        })
        .collect::<Result<Vec<_>, crate::lightgeom::GeometryError>>()?;
    let (irr, dir): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
    Ok(PlanarTargets {
        irradiance: Raster::from_vec(res, res, irr).expect("shape"),
        direction: Raster::from_vec(res, res, dir).expect("shape"),
    })
}

/// Six-channel supervision tensor, irradiance first then direction.
pub fn concat_target(t: &PlanarTargets, layout: ChannelLayout) -> Raster<[f64; 6]> {
    let (w, h) = t.resolution();
    let px = t
        .irradiance
        .pixels()
        .iter()
        .zip(t.direction.pixels())
        .map(|(e, d)| match layout {
            // Both layouts carry a zero sixth channel; they differ in meaning only.
            ChannelLayout::PaddedDirection | ChannelLayout::Direction3 => [e[0], e[1], e[2], d[0], d[1], 0.0],
        })
        .collect();
    Raster::from_vec(w, h, px).expect("shape")
}
