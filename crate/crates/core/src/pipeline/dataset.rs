//! Batch dataset driver.
//!
//! Images are independent jobs on a bounded worker pool. Each finished image
//! hands its manifest lines to a single appender that writes them in input
//! order, so the manifest does not depend on scheduling.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ingest::{list_scene_ids, load_scene, IngestOptions};
use super::quality::{precheck, quality_check, QualityReport, QualityThresholds, Verdict};
use super::record::{
    generate_pair, Provenance, DARKENED_INPUT_FILE, INPUT_FILE, PARAMS_FILE, RESIDUAL_PFM_FILE,
    RESIDUAL_PNG_FILE, TARGET_FILE,
};
use crate::lightgeom::LightParams;
use crate::sampling::{sample_gamma, sample_params, PolicyError, SamplingPolicy, SeededRng, Variant};
use crate::shading::{RenderConfig, SceneAssets, ShadingError};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input root {path}: {source}")]
    Input { path: String, source: io::Error },
    #[error("output root {path}: {source}")]
    Output { path: String, source: io::Error },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Render(#[from] ShadingError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub policy: SamplingPolicy,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub render: RenderConfig,
    pub workers: usize,
    pub thresholds: QualityThresholds,
    pub ingest: IngestOptions,
    /// Also write the gamma-scaled input of every record.
    pub darken: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            policy: SamplingPolicy::default(),
            seed: 0,
            variants: Variant::ALL.to_vec(),
            render: RenderConfig::default(),
            workers: 1,
            thresholds: QualityThresholds::default(),
            ingest: IngestOptions::default(),
            darken: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordPaths {
    pub input: String,
    pub target: String,
    pub residual_png: String,
    pub residual_pfm: String,
    pub params: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input_darkened: Option<String>,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub variant: Variant,
    pub status: EntryStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<LightParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quality: Option<QualityReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paths: Option<RecordPaths>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub images: usize,
    pub attempted: usize,
    pub passed: usize,
    pub failed: usize,
    /// Failure counts by reason code.
    pub by_reason: BTreeMap<String, usize>,
    pub seed: u64,
    pub policy_hash: String,
    pub renderer_version: String,
}

impl DatasetSummary {
    fn count(&mut self, e: &ManifestEntry) {
        self.attempted += 1;
        match e.status {
            EntryStatus::Pass => self.passed += 1,
            EntryStatus::Fail => {
                self.failed += 1;
                let reason = e.reason.clone().unwrap_or_else(|| "unknown".into());
                *self.by_reason.entry(reason).or_default() += 1;
            }
        }
    }
}

/// Seed of the record stream for one (image, variant).
pub fn job_seed(global_seed: u64, image_id: &str, variant: Variant) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update((image_id.len() as u64).to_le_bytes());
    h.update(image_id.as_bytes());
    h.update(variant.as_str().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Draws the record parameters for an image `height` pixels tall.
pub fn draw_record_params(policy: &SamplingPolicy, variant: Variant, seed: u64, height: usize) -> (LightParams, f64) {
    let mut rng = SeededRng::new(seed);
    let params = sample_params(policy, variant, &mut rng).scaled(policy.length_scale(height));
    let gamma = sample_gamma(&mut rng);
    (params, gamma)
}

struct Appender {
    next: usize,
    pending: BTreeMap<usize, Vec<ManifestEntry>>,
    out: BufWriter<File>,
    summary: DatasetSummary,
    error: Option<io::Error>,
}

impl Appender {
    fn submit(&mut self, index: usize, entries: Vec<ManifestEntry>) {
        self.pending.insert(index, entries);
        while let Some(entries) = self.pending.remove(&self.next) {
            for e in &entries {
                self.summary.count(e);
                if self.error.is_none() {
                    let line = serde_json::to_string(e).expect("entry serializes");
                    if let Err(err) = writeln!(self.out, "{line}") {
                        self.error = Some(err);
                    }
                }
            }
            self.next += 1;
        }
    }
}

struct Job<'a> {
    cfg: &'a DatasetConfig,
    out_root: &'a Path,
    policy_hash: &'a str,
}

impl Job<'_> {
    fn failure(&self, image_id: &str, variant: Variant, seed: u64, reason: &str, error: Option<String>) -> ManifestEntry {
        ManifestEntry {
            image_id: image_id.to_string(),
            variant,
            status: EntryStatus::Fail,
            reason: Some(reason.to_string()),
            error,
            seed,
            params: None,
            gamma: None,
            quality: None,
            paths: None,
        }
    }

    fn run_image(&self, input_root: &Path, image_id: &str) -> Vec<ManifestEntry> {
        let seeds: Vec<_> = self.cfg.variants.iter().map(|&v| (v, job_seed(self.cfg.seed, image_id, v))).collect();
        match load_scene(input_root, image_id, &self.cfg.ingest) {
            Ok(scene) => seeds.into_iter().map(|(v, s)| self.run_variant(&scene, image_id, v, s)).collect(),
            Err(e) => {
                log::warn!("{image_id}: {e}");
                seeds.into_iter().map(|(v, s)| self.failure(image_id, v, s, e.code(), Some(e.to_string()))).collect()
            }
        }
    }

    fn run_variant(&self, scene: &SceneAssets, image_id: &str, variant: Variant, seed: u64) -> ManifestEntry {
        let cfg = self.cfg;
        let (params, gamma) = draw_record_params(&cfg.policy, variant, seed, scene.height());
        let fail = |reason: &str, error: Option<String>, quality: Option<QualityReport>| ManifestEntry {
            params: Some(params),
            gamma: Some(gamma),
            quality,
            ..self.failure(image_id, variant, seed, reason, error)
        };
        if let Some(reason) = precheck(scene, &cfg.thresholds) {
            return fail(reason.code(), None, None);
        }
        let mut render = cfg.render;
        render.visibility.seed = seed;
        let provenance = Provenance {
            image_id: image_id.to_string(),
            variant: Some(variant),
            seed,
            policy_hash: self.policy_hash.to_string(),
            renderer_version: crate::RENDERER_VERSION.to_string(),
        };
        let record = match generate_pair(scene, &params, gamma, &render, provenance) {
            Ok(r) => r,
            Err(e) => return fail("render-error", Some(e.to_string()), None),
        };
        let quality = quality_check(scene, &record.residual, &cfg.thresholds);
        if let Verdict::Fail(reason) = quality.verdict {
            return fail(reason.code(), None, Some(quality));
        }
        let rel = format!("{image_id}/{variant}");
        if let Err(e) = record.write(&self.out_root.join(&rel), &record.meta(render.n_samples, Some(quality)), cfg.darken) {
            return fail("write-error", Some(e.to_string()), Some(quality));
        }
        let path = |f: &str| format!("{rel}/{f}");
        ManifestEntry {
            image_id: image_id.to_string(),
            variant,
            status: EntryStatus::Pass,
            reason: None,
            error: None,
            seed,
            params: Some(params),
            gamma: Some(gamma),
            quality: Some(quality),
            paths: Some(RecordPaths {
                input: path(INPUT_FILE),
                target: path(TARGET_FILE),
                residual_png: path(RESIDUAL_PNG_FILE),
                residual_pfm: path(RESIDUAL_PFM_FILE),
                params: path(PARAMS_FILE),
                input_darkened: cfg.darken.then(|| path(DARKENED_INPUT_FILE)),
            }),
        }
    }
}

/// Renders every image under `input_root` for each configured variant.
///
/// Per-image problems become failed manifest lines; only unusable roots or
/// configuration abort the run.
pub fn run_dataset(input_root: &Path, output_root: &Path, cfg: &DatasetConfig) -> Result<DatasetSummary, DatasetError> {
    cfg.policy.validate()?;
    cfg.render.validate()?;
    if cfg.variants.is_empty() {
        return Err(DatasetError::Config("at least one variant is required".into()));
    }
    if cfg.workers == 0 {
        return Err(DatasetError::Config("workers must be at least 1".into()));
    }
    let ids = list_scene_ids(input_root)
        .map_err(|source| DatasetError::Input { path: input_root.display().to_string(), source })?;
    let out_err = |source: io::Error| DatasetError::Output { path: output_root.display().to_string(), source };
    fs::create_dir_all(output_root).map_err(out_err)?;
    let manifest_path: PathBuf = output_root.join(MANIFEST_FILE);
    let policy_hash = cfg.policy.hash();
    let appender = Mutex::new(Appender {
        next: 0,
        pending: BTreeMap::new(),
        out: BufWriter::new(File::create(&manifest_path).map_err(out_err)?),
        summary: DatasetSummary {
            images: ids.len(),
            seed: cfg.seed,
            policy_hash: policy_hash.clone(),
            renderer_version: crate::RENDERER_VERSION.to_string(),
            ..Default::default()
        },
        error: None,
    });
    let job = Job { cfg, out_root: output_root, policy_hash: &policy_hash };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| DatasetError::Config(e.to_string()))?;
    pool.install(|| {
        ids.par_iter().enumerate().for_each(|(i, id)| {
            let entries = job.run_image(input_root, id);
            log::info!("{id}: {} record(s)", entries.len());
            appender.lock().expect("appender lock").submit(i, entries);
        })
    });
    let mut app = appender.into_inner().expect("appender lock");
    if let Some(e) = app.error.take() {
        return Err(out_err(e));
    }
    app.out.flush().map_err(out_err)?;
    let mut json = serde_json::to_vec_pretty(&app.summary).expect("summary serializes");
    json.push(b'\n');
    fs::write(output_root.join(SUMMARY_FILE), json).map_err(out_err)?;
    Ok(app.summary)
}

pub fn read_manifest(path: &Path) -> io::Result<Vec<ManifestEntry>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(io::Error::other))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ingest::save_scene;
    use crate::synthetic;

    fn small_cfg() -> DatasetConfig {
        DatasetConfig {
            render: RenderConfig { n_samples: 16, ..Default::default() },
            seed: 3,
            workers: 2,
            ..Default::default()
        }
    }

    #[test]
    fn job_seeds_differ() {
        let a = job_seed(1, "img", Variant::Warm);
        assert_ne!(a, job_seed(1, "img", Variant::Cool));
        assert_ne!(a, job_seed(2, "img", Variant::Warm));
        assert_ne!(a, job_seed(1, "im", Variant::Warm));
        assert_eq!(a, job_seed(1, "img", Variant::Warm));
    }

    #[test]
    fn corrupt_image_is_isolated() {
        let input = tempfile::tempdir().unwrap();
        for i in 0..3 {
            save_scene(input.path(), &format!("s{i}"), &synthetic::face_scene(24, 24, i)).unwrap();
        }
        fs::write(input.path().join("s1").join("depth.pfm"), b"garbage").unwrap();
        let out = tempfile::tempdir().unwrap();
        let summary = run_dataset(input.path(), out.path(), &small_cfg()).unwrap();
        assert_eq!(summary.attempted, 9);
        let manifest = read_manifest(&out.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.len(), 9);
        let bad: Vec<_> = manifest.iter().filter(|e| e.image_id == "s1").collect();
        assert!(bad.iter().all(|e| e.status == EntryStatus::Fail));
        assert!(bad.iter().all(|e| e.reason.as_deref() == Some("undecodable-asset")));
        assert_eq!(summary.by_reason.get("undecodable-asset"), Some(&3));
        assert!(out.path().join(SUMMARY_FILE).exists());
    }

    #[test]
    fn manifest_order_is_independent_of_workers() {
        let input = tempfile::tempdir().unwrap();
        for i in 0..4 {
            save_scene(input.path(), &format!("s{i}"), &synthetic::face_scene(16, 16, i)).unwrap();
        }
        let run = |workers| {
            let out = tempfile::tempdir().unwrap();
            run_dataset(input.path(), out.path(), &DatasetConfig { workers, ..small_cfg() }).unwrap();
            fs::read(out.path().join(MANIFEST_FILE)).unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn bad_config_rejected() {
        let d = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig { variants: vec![], ..small_cfg() };
        assert!(matches!(run_dataset(d.path(), d.path(), &cfg), Err(DatasetError::Config(_))));
        let missing = d.path().join("nope");
        assert!(matches!(run_dataset(&missing, d.path(), &small_cfg()), Err(DatasetError::Input { .. })));
    }
}
