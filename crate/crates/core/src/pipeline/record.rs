use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::png;
use super::quality::QualityReport;
use crate::lightgeom::LightParams;
use crate::pfm;
use crate::raster::{Raster, Rgb32};
use crate::sampling::Variant;
use crate::shading::{compose_target, render_fill_light, FillResidual, RenderConfig, SceneAssets, ShadingError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub image_id: String,
    pub variant: Option<Variant>,
    /// Seed of this record's random stream.
    pub seed: u64,
    pub policy_hash: String,
    pub renderer_version: String,
}

/// One training pair: the untouched photograph, the carrier target and the
/// residual that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRecord {
    pub input_image: Raster<Rgb32>,
    pub target_image: Raster<Rgb32>,
    pub residual: FillResidual,
    pub params: LightParams,
    pub gamma: f64,
    pub provenance: Provenance,
}

/// Contents of `params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub params: LightParams,
    pub gamma: f64,
    pub n_samples: usize,
    pub provenance: Provenance,
    pub quality: Option<QualityReport>,
}

pub const INPUT_FILE: &str = "input.png";
pub const DARKENED_INPUT_FILE: &str = "input_darkened.png";
pub const TARGET_FILE: &str = "target.png";
pub const RESIDUAL_PNG_FILE: &str = "residual.png";
pub const RESIDUAL_PFM_FILE: &str = "residual.pfm";
pub const PARAMS_FILE: &str = "params.json";

pub fn generate_pair(
    scene: &SceneAssets,
    params: &LightParams,
    gamma: f64,
    cfg: &RenderConfig,
    provenance: Provenance,
) -> Result<PairedRecord, ShadingError> {
    let residual = render_fill_light(scene, params, cfg)?;
    let target_image = compose_target(&scene.image, &residual.srgb, gamma)?;
    Ok(PairedRecord {
        input_image: scene.image.clone(),
        target_image,
        residual,
        params: *params,
        gamma,
        provenance,
    })
}

impl PairedRecord {
    pub fn meta(&self, n_samples: usize, quality: Option<QualityReport>) -> RecordMeta {
        RecordMeta {
            params: self.params,
            gamma: self.gamma,
            n_samples,
            provenance: self.provenance.clone(),
            quality,
        }
    }

    /// `gamma * input`, the darkened alternative "before" image.
    pub fn darkened_input(&self) -> Raster<Rgb32> {
        let g = self.gamma;
        self.input_image.map(|p| p.map(|c| (g * c as f64) as f32))
    }

    /// Writes the record files into `dir`.
    pub fn write(&self, dir: &Path, meta: &RecordMeta, darken: bool) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(INPUT_FILE), png::encode_rgb(&self.input_image))?;
        fs::write(dir.join(TARGET_FILE), png::encode_rgb(&self.target_image))?;
        fs::write(dir.join(RESIDUAL_PNG_FILE), png::encode_rgb(&self.residual.srgb))?;
        fs::write(dir.join(RESIDUAL_PFM_FILE), pfm::encode_rgb(&self.residual.linear))?;
        if darken {
            fs::write(dir.join(DARKENED_INPUT_FILE), png::encode_rgb(&self.darkened_input()))?;
        }
        let mut json = serde_json::to_vec_pretty(meta).map_err(io::Error::other)?;
        json.push(b'\n');
        fs::write(dir.join(PARAMS_FILE), json)
    }
}
