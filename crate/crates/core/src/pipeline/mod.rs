//! Dataset factory: asset ingestion, quality control, paired records and
//! the batch driver.

mod dataset;
mod ingest;
pub mod png;
mod quality;
mod record;

pub use dataset::{
    draw_record_params, job_seed, read_manifest, run_dataset, DatasetConfig, DatasetError, DatasetSummary,
    EntryStatus, ManifestEntry, RecordPaths, MANIFEST_FILE, SUMMARY_FILE,
};
pub use ingest::{
    list_scene_ids, load_scene, save_scene, scene_dir, AssetBundle, AssetKind, IngestError, IngestOptions,
};
pub use quality::{precheck, quality_check, FailureReason, QualityReport, QualityThresholds, Verdict};
pub use record::{
    generate_pair, PairedRecord, Provenance, RecordMeta, DARKENED_INPUT_FILE, INPUT_FILE, PARAMS_FILE,
    RESIDUAL_PFM_FILE, RESIDUAL_PNG_FILE, TARGET_FILE,
};
