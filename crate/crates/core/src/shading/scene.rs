use thiserror::Error;

use crate::math::Vec3;
use crate::raster::{fit_within, Raster, Rgb32};
use crate::visibility::{DepthRaster, VisibilityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("{asset} is {found_w}x{found_h} but image is {expected_w}x{expected_h}")]
    DimensionMismatch {
        asset: &'static str,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("{asset} channel value {value} outside [0, 1] at ({x}, {y})")]
    ChannelRange { asset: &'static str, value: f32, x: usize, y: usize },
    #[error("depth: {0}")]
    Depth(#[from] VisibilityError),
    #[error("scene is empty")]
    Empty,
}

/// Normal used where the estimator produced a degenerate vector: facing the
/// camera (and the default lamp position).
pub const DEFAULT_NORMAL: Rgb32 = [0.0, 0.0, 1.0];

/// Immutable per-image rasters: the photograph plus estimated geometry and
/// materials. All share one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAssets {
    /// Original sRGB image.
    pub image: Raster<Rgb32>,
    pub depth: DepthRaster,
    /// Unit normals (x right, y down, z toward the camera).
    pub normals: Raster<Rgb32>,
    /// Diffuse albedo, sRGB encoded.
    pub albedo: Raster<Rgb32>,
    /// Specular coefficient, sRGB encoded.
    pub specular: Raster<Rgb32>,
    pub mask: Raster<bool>,
    /// Normals replaced by [`DEFAULT_NORMAL`] during construction.
    pub replaced_normals: usize,
}

fn check_unit_range(asset: &'static str, r: &Raster<Rgb32>) -> Result<(), SceneError> {
    for (i, px) in r.pixels().iter().enumerate() {
        for &value in px {
            if !(0.0..=1.0).contains(&value) {
                let w = r.width();
                return Err(SceneError::ChannelRange { asset, value, x: i % w, y: i / w });
            }
        }
    }
    Ok(())
}

/// Renormalizes every normal; zero or non-finite vectors become
/// [`DEFAULT_NORMAL`]. Returns the replacement count.
pub fn renormalize_normals(normals: &mut Raster<Rgb32>) -> usize {
    let mut replaced = 0;
    for n in normals.pixels_mut() {
        match Vec3::from(*n).try_normalize() {
            Some(u) if u.length() > 0.5 => *n = [u.x as f32, u.y as f32, u.z as f32],
            _ => {
                *n = DEFAULT_NORMAL;
                replaced += 1;
            }
        }
    }
    replaced
}

impl SceneAssets {
    /// Validates shapes and ranges and renormalizes the normals.
    pub fn new(
        image: Raster<Rgb32>,
        depth: Raster<f32>,
        mut normals: Raster<Rgb32>,
        albedo: Raster<Rgb32>,
        specular: Raster<Rgb32>,
        mask: Raster<bool>,
    ) -> Result<Self, SceneError> {
        if image.is_empty() {
            return Err(SceneError::Empty);
        }
        let (w, h) = image.dims();
        let check = |asset: &'static str, dims: (usize, usize)| {
            if dims == (w, h) {
                Ok(())
            } else {
                Err(SceneError::DimensionMismatch {
                    asset,
                    expected_w: w,
                    expected_h: h,
                    found_w: dims.0,
                    found_h: dims.1,
                })
            }
        };
        check("depth", depth.dims())?;
        check("normals", normals.dims())?;
        check("albedo", albedo.dims())?;
        check("specular", specular.dims())?;
        check("mask", mask.dims())?;
        check_unit_range("image", &image)?;
        check_unit_range("albedo", &albedo)?;
        check_unit_range("specular", &specular)?;
        let depth = DepthRaster::new(depth)?;
        let replaced_normals = renormalize_normals(&mut normals);
        Ok(Self { image, depth, normals, albedo, specular, mask, replaced_normals })
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    pub fn mask_coverage(&self) -> f64 {
        let on = self.mask.pixels().iter().filter(|&&m| m).count();
        on as f64 / self.mask.len().max(1) as f64
    }

    /// Area-downsampled copy whose longer side is at most `max_side`, with
    /// depth converted to the new pixel unit. Returns the copy and the length
    /// scale (new pixels per old pixel) to apply to light parameters.
    pub fn downsampled(&self, max_side: usize) -> (SceneAssets, f64) {
        let (w, h) = self.dims();
        let (nw, nh) = fit_within(w, h, max_side);
        if (nw, nh) == (w, h) {
            return (self.clone(), 1.0);
        }
        let scale = nh as f64 / h as f64;
        let depth = self.depth.raster().resize_area(nw, nh).map(|d| (*d as f64 * scale) as f32);
        let mut normals = self.normals.resize_area(nw, nh);
        let replaced = renormalize_normals(&mut normals);
        let mask = self
            .mask
            .map(|&m| if m { 1.0f32 } else { 0.0 })
            .resize_area(nw, nh)
            .map(|&v| v >= 0.5);
        let small = SceneAssets {
            image: self.image.resize_area(nw, nh),
            depth: DepthRaster::new(depth).expect("finite input stays finite"),
            normals,
            albedo: self.albedo.resize_area(nw, nh),
            specular: self.specular.resize_area(nw, nh),
            mask,
            replaced_normals: replaced,
        };
        (small, scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(w: usize, h: usize, v: f32) -> Raster<Rgb32> {
        Raster::filled(w, h, [v; 3])
    }

    fn build(depth_w: usize) -> Result<SceneAssets, SceneError> {
        SceneAssets::new(
            rgb(4, 3, 0.5),
            Raster::filled(depth_w, 3, 1.0),
            Raster::filled(4, 3, [0.0, 0.0, 2.0]),
            rgb(4, 3, 0.5),
            rgb(4, 3, 0.1),
            Raster::filled(4, 3, true),
        )
    }

    #[test]
    fn dimension_mismatch_names_both_shapes() {
        let err = build(5).unwrap_err();
        assert_eq!(
            err,
            SceneError::DimensionMismatch { asset: "depth", expected_w: 4, expected_h: 3, found_w: 5, found_h: 3 }
        );
        let msg = err.to_string();
        assert!(msg.contains("5x3") && msg.contains("4x3"));
    }

    #[test]
    fn normals_renormalized() {
        let s = build(4).unwrap();
        assert!(s.normals.pixels().iter().all(|n| *n == [0.0, 0.0, 1.0]));
        assert_eq!(s.replaced_normals, 0);
    }

    #[test]
    fn zero_normal_replaced_and_counted() {
        let mut n = Raster::filled(2, 2, [0.3f32, 0.0, 0.4]);
        n.set(1, 0, [0.0; 3]);
        n.set(0, 1, [f32::NAN, 0.0, 1.0]);
        assert_eq!(renormalize_normals(&mut n), 2);
        assert_eq!(n.get(1, 0), DEFAULT_NORMAL);
        let u = Vec3::from(n.get(0, 0));
        assert!((u.length() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn range_checked() {
        let err = SceneAssets::new(
            rgb(2, 2, 1.5),
            Raster::filled(2, 2, 0.0),
            rgb(2, 2, 1.0),
            rgb(2, 2, 0.5),
            rgb(2, 2, 0.5),
            Raster::filled(2, 2, false),
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::ChannelRange { asset: "image", .. }));
    }

    #[test]
    fn downsampling_rescales_depth() {
        let s = SceneAssets::new(
            rgb(64, 32, 0.25),
            Raster::filled(64, 32, 100.0),
            Raster::filled(64, 32, [0.0, 0.0, 1.0]),
            rgb(64, 32, 0.5),
            rgb(64, 32, 0.5),
            Raster::filled(64, 32, true),
        )
        .unwrap();
        let (small, scale) = s.downsampled(16);
        assert_eq!(small.dims(), (16, 8));
        assert_eq!(scale, 0.25);
        assert!(small.depth.raster().pixels().iter().all(|&d| (d - 25.0).abs() < 1e-4));
        assert!(small.mask.pixels().iter().all(|&m| m));
    }
}
