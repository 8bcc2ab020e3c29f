//! Physically based fill-light rendering for portraits.
//!
//! A disk-shaped area light, described by six parameters (color temperature,
//! half-peak beam angle, distance, diameter and image-plane offset), is shaded
//! onto per-image geometry and material rasters. The result is an additive
//! residual that can be composited over the original photograph, turned into
//! carrier training targets, or rendered onto a flat plane as compact
//! supervision for parameter encoders.
//!
//! Module map:
//!
//! - [`colorspace`]: sRGB transfer, luminance, CCT to light color.
//! - [`lightgeom`]: Fibonacci disk sampling, incident rays, cosine lobe.
//! - [`visibility`]: screen-space soft shadows over a depth raster.
//! - [`shading`]: Monte Carlo irradiance, Blinn-Phong, residual assembly.
//! - [`planar`]: planar irradiance and direction-field targets.
//! - [`sampling`]: randomized light parameter policies.
//! - [`pipeline`]: asset ingestion, quality control, paired records, batches.

pub mod colorspace;
pub mod lightgeom;
pub mod math;
pub mod pfm;
pub mod pipeline;
pub mod planar;
pub mod raster;
pub mod sampling;
pub mod shading;
pub mod synthetic;
pub mod visibility;

pub use colorspace::{ColorTemperature, LinearRgb, SrgbColor, XyzColor};
pub use lightgeom::LightParams;
pub use raster::Raster;
pub use shading::{FillResidual, RenderConfig, SceneAssets};

/// Version string recorded in dataset provenance.
pub const RENDERER_VERSION: &str = concat!("fillight/", env!("CARGO_PKG_VERSION"));
