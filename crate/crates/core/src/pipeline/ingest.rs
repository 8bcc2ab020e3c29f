//! Scene asset ingestion.
//!
//! A scene directory holds six files:
//!
//! ```text
//! <root>/<image_id>/image.png     sRGB photograph
//!                   depth.pfm     1-channel depth, pixel units, larger = farther
//!                   normal.pfm    3-channel normals (x right, y down, z toward camera)
//!                   albedo.png    sRGB diffuse albedo
//!                   specular.png  sRGB specular coefficient
//!                   mask.png      8-bit grayscale face mask, on above 127
//! ```

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::png;
use crate::pfm;
use crate::shading::{SceneAssets, SceneError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Image,
    Depth,
    Normal,
    Albedo,
    Specular,
    Mask,
}

impl AssetKind {
    pub const ALL: [AssetKind; 6] = [
        AssetKind::Image,
        AssetKind::Depth,
        AssetKind::Normal,
        AssetKind::Albedo,
        AssetKind::Specular,
        AssetKind::Mask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AssetKind::Image => "image",
            AssetKind::Depth => "depth",
            AssetKind::Normal => "normal",
            AssetKind::Albedo => "albedo",
            AssetKind::Specular => "specular",
            AssetKind::Mask => "mask",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            AssetKind::Image => "image.png",
            AssetKind::Depth => "depth.pfm",
            AssetKind::Normal => "normal.pfm",
            AssetKind::Albedo => "albedo.png",
            AssetKind::Specular => "specular.png",
            AssetKind::Mask => "mask.png",
        }
    }
}

impl fmt::Display for AssetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AssetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        AssetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown asset {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing {asset} asset ({path})")]
    Missing { asset: AssetKind, path: String },
    #[error("cannot read {asset} ({path}): {source}")]
    Io { asset: AssetKind, path: String, source: io::Error },
    #[error("cannot decode {asset}: {message}")]
    Decode { asset: AssetKind, message: String },
    #[error(transparent)]
    Dimension(SceneError),
    #[error("invalid scene: {0}")]
    Invalid(SceneError),
    #[error("invalid ingest option: {0}")]
    Options(String),
}

impl IngestError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Missing { .. } => "missing-asset",
            IngestError::Io { .. } => "io-error",
            IngestError::Decode { .. } => "undecodable-asset",
            IngestError::Dimension(_) => "dimension-mismatch",
            IngestError::Invalid(_) => "invalid-asset",
            IngestError::Options(_) => "invalid-options",
        }
    }
}

impl From<SceneError> for IngestError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::DimensionMismatch { .. } => IngestError::Dimension(e),
            other => IngestError::Invalid(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    /// Multiplier that converts stored depth to pixel units.
    pub depth_scale: f64,
    /// Mask levels strictly above this are on.
    pub mask_threshold: u8,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { depth_scale: 1.0, mask_threshold: 127 }
    }
}

/// Encoded asset files, in memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssetBundle {
    pub image: Option<Vec<u8>>,
    pub depth: Option<Vec<u8>>,
    pub normal: Option<Vec<u8>>,
    pub albedo: Option<Vec<u8>>,
    pub specular: Option<Vec<u8>>,
    pub mask: Option<Vec<u8>>,
}

impl AssetBundle {
    pub fn get(&self, kind: AssetKind) -> Option<&[u8]> {
        self.slot(kind).as_deref()
    }

    fn slot(&self, kind: AssetKind) -> &Option<Vec<u8>> {
        match kind {
            AssetKind::Image => &self.image,
            AssetKind::Depth => &self.depth,
            AssetKind::Normal => &self.normal,
            AssetKind::Albedo => &self.albedo,
            AssetKind::Specular => &self.specular,
            AssetKind::Mask => &self.mask,
        }
    }

    pub fn set(&mut self, kind: AssetKind, bytes: Vec<u8>) {
        let slot = match kind {
            AssetKind::Image => &mut self.image,
            AssetKind::Depth => &mut self.depth,
            AssetKind::Normal => &mut self.normal,
            AssetKind::Albedo => &mut self.albedo,
            AssetKind::Specular => &mut self.specular,
            AssetKind::Mask => &mut self.mask,
        };
        *slot = Some(bytes);
    }

    pub fn missing(&self) -> Vec<AssetKind> {
        AssetKind::ALL.into_iter().filter(|k| self.get(*k).is_none()).collect()
    }

    /// Total encoded size in bytes.
    pub fn size(&self) -> usize {
        AssetKind::ALL.iter().filter_map(|k| self.get(*k)).map(<[u8]>::len).sum()
    }

    /// SHA-256 over the assets in a fixed order, each prefixed by its name and
    /// length. Hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for kind in AssetKind::ALL {
            h.update(kind.name().as_bytes());
            match self.get(kind) {
                Some(b) => {
                    h.update((b.len() as u64).to_le_bytes());
                    h.update(b);
                }
                None => h.update(u64::MAX.to_le_bytes()),
            }
        }
        hex::encode(h.finalize())
    }

    /// Reads every asset present in `dir`; absent files stay `None`.
    pub fn read_dir(dir: &Path) -> Result<Self, IngestError> {
        let mut bundle = AssetBundle::default();
        for kind in AssetKind::ALL {
            let path = dir.join(kind.file_name());
            match fs::read(&path) {
                Ok(b) => bundle.set(kind, b),
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(source) => {
                    return Err(IngestError::Io { asset: kind, path: path.display().to_string(), source })
                }
            }
        }
        Ok(bundle)
    }

    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for kind in AssetKind::ALL {
            if let Some(b) = self.get(kind) {
                fs::write(dir.join(kind.file_name()), b)?;
            }
        }
        Ok(())
    }

    /// Encodes a scene in the on-disk formats.
    pub fn from_scene(scene: &SceneAssets) -> Self {
        AssetBundle {
            image: Some(png::encode_rgb(&scene.image)),
            depth: Some(pfm::encode_gray(scene.depth.raster())),
            normal: Some(pfm::encode_rgb(&scene.normals)),
            albedo: Some(png::encode_rgb(&scene.albedo)),
            specular: Some(png::encode_rgb(&scene.specular)),
            mask: Some(png::encode_mask(&scene.mask)),
        }
    }

    pub fn decode(&self, opts: &IngestOptions) -> Result<SceneAssets, IngestError> {
        if !(opts.depth_scale > 0.0 && opts.depth_scale.is_finite()) {
            return Err(IngestError::Options(format!("depth scale {} must be positive", opts.depth_scale)));
        }
        let need = |kind: AssetKind| {
            self.get(kind).ok_or(IngestError::Missing { asset: kind, path: kind.file_name().to_string() })
        };
        for kind in AssetKind::ALL {
            need(kind)?;
        }
        let bad = |asset: AssetKind| move |e: &dyn fmt::Display| IngestError::Decode { asset, message: e.to_string() };
        let rgb = |kind: AssetKind| png::decode_rgb(need(kind)?).map_err(|e| bad(kind)(&e));
        let image = rgb(AssetKind::Image)?;
        let albedo = rgb(AssetKind::Albedo)?;
        let specular = rgb(AssetKind::Specular)?;
        let mask = png::decode_gray8(need(AssetKind::Mask)?).map_err(|e| bad(AssetKind::Mask)(&e))?;
        let depth = pfm::decode_gray(need(AssetKind::Depth)?).map_err(|e| bad(AssetKind::Depth)(&e))?;
        let normals = pfm::decode_rgb(need(AssetKind::Normal)?).map_err(|e| bad(AssetKind::Normal)(&e))?;
        let depth = if opts.depth_scale == 1.0 {
            depth
        } else {
            depth.map(|&d| (d as f64 * opts.depth_scale) as f32)
        };
        let threshold = opts.mask_threshold;
        let mask = mask.map(|&v| v > threshold);
        Ok(SceneAssets::new(image, depth, normals, albedo, specular, mask)?)
    }
}

pub fn scene_dir(root: &Path, image_id: &str) -> PathBuf {
    root.join(image_id)
}

/// Loads `<root>/<image_id>/`.
pub fn load_scene(root: &Path, image_id: &str, opts: &IngestOptions) -> Result<SceneAssets, IngestError> {
    let dir = scene_dir(root, image_id);
    let bundle = AssetBundle::read_dir(&dir)?;
    if let Some(kind) = bundle.missing().first() {
        return Err(IngestError::Missing { asset: *kind, path: dir.join(kind.file_name()).display().to_string() });
    }
    bundle.decode(opts)
}

/// Writes a scene in the ingestion layout under `<root>/<image_id>/`.
pub fn save_scene(root: &Path, image_id: &str, scene: &SceneAssets) -> io::Result<()> {
    AssetBundle::from_scene(scene).write_dir(&scene_dir(root, image_id))
}

/// Image ids under `root`: subdirectories, sorted.
pub fn list_scene_ids(root: &Path) -> io::Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                ids.push(name.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}
