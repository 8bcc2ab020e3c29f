use std::fmt;

use serde::{Deserialize, Serialize};

use crate::colorspace::LUMA_WEIGHTS;
use crate::shading::{FillResidual, SceneAssets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityThresholds {
    /// Minimum fraction of mask pixels.
    pub min_coverage: f64,
    /// Bounds on the mean linear luminance of the masked residual.
    pub energy_floor: f64,
    pub energy_ceiling: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self { min_coverage: 0.02, energy_floor: 1e-6, energy_ceiling: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    FailedSegmentation,
    InvalidRender,
    ResidualTooDim,
    ResidualTooBright,
}

impl FailureReason {
    pub fn code(self) -> &'static str {
        match self {
            FailureReason::FailedSegmentation => "failed-segmentation",
            FailureReason::InvalidRender => "invalid-render",
            FailureReason::ResidualTooDim => "residual-too-dim",
            FailureReason::ResidualTooBright => "residual-too-bright",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail(FailureReason),
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mask_coverage: f64,
    pub residual_energy: f64,
    pub nan_count: usize,
    pub replaced_normals: usize,
    pub verdict: Verdict,
}

/// Scene-only check run before rendering.
pub fn precheck(scene: &SceneAssets, t: &QualityThresholds) -> Option<FailureReason> {
    (scene.mask_coverage() < t.min_coverage).then_some(FailureReason::FailedSegmentation)
}

pub fn quality_check(scene: &SceneAssets, res: &FillResidual, t: &QualityThresholds) -> QualityReport {
    let coverage = scene.mask_coverage();
    let nan_count = res
        .linear
        .pixels()
        .iter()
        .chain(res.srgb.pixels())
        .flatten()
        .filter(|v| !v.is_finite())
        .count();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, &m) in res.linear.pixels().iter().zip(scene.mask.pixels()) {
        if m {
            n += 1;
            sum += LUMA_WEIGHTS.iter().zip(p).map(|(w, &c)| w * c as f64).sum::<f64>();
        }
    }
    let energy = if n > 0 { sum / n as f64 } else { 0.0 };
    let verdict = if nan_count > 0 {
        Verdict::Fail(FailureReason::InvalidRender)
    } else if coverage < t.min_coverage {
        Verdict::Fail(FailureReason::FailedSegmentation)
    } else if energy < t.energy_floor {
        Verdict::Fail(FailureReason::ResidualTooDim)
    } else if energy > t.energy_ceiling {
        Verdict::Fail(FailureReason::ResidualTooBright)
    } else {
        Verdict::Pass
    };
    QualityReport {
        mask_coverage: coverage,
        residual_energy: if energy.is_finite() { energy } else { 0.0 },
        nan_count,
        replaced_normals: scene.replaced_normals,
        verdict,
    }
}
