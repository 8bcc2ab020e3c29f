//! Randomized light parameters for dataset construction.
//!
//! Temperatures come from one of three variant ranges. Beam angle, distance
//! and diameter are uniform over their ranges, occasionally drawn from a
//! widened range instead. Offsets follow a long-tailed mixture: an isotropic
//! Gaussian core plus a uniform disk of large radius.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::colorspace::{ColorTemperature, CCT_MAX_K, CCT_MIN_K};
use crate::lightgeom::LightParams;

pub const POLICY_SCHEMA_VERSION: u32 = 1;

const MAX_RETRIES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("unsupported policy schema version {0}")]
    Version(u32),
    #[error("unknown variant {0:?} (expected warm, white or cool)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Warm,
    White,
    Cool,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Warm, Variant::White, Variant::Cool];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Warm => "warm",
            Variant::White => "white",
            Variant::Cool => "cool",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, PolicyError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "warm" => Ok(Variant::Warm),
            "white" => Ok(Variant::White),
            "cool" => Ok(Variant::Cool),
            other => Err(PolicyError::UnknownVariant(other.to_string())),
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.min + (self.max - self.min) * rng.random::<f64>()
    }

    fn widened(&self, factor: f64) -> Range {
        let pad = factor * (self.max - self.min);
        Range::new(self.min - pad, self.max + pad)
    }

    fn clamped(&self, lo: f64, hi: f64) -> Range {
        Range::new(self.min.max(lo), self.max.min(hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRanges {
    pub warm: Range,
    pub white: Range,
    pub cool: Range,
}

impl TemperatureRanges {
    pub fn get(&self, v: Variant) -> Range {
        match v {
            Variant::Warm => self.warm,
            Variant::White => self.white,
            Variant::Cool => self.cool,
        }
    }
}

/// Serialized as JSON; see [`SamplingPolicy::from_json`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPolicy {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub temp_ranges: TemperatureRanges,
    /// Per-axis standard deviation of the Gaussian offset core, pixels.
    pub offset_core_sigma: f64,
    /// Probability of drawing the offset from the wide uniform disk.
    pub offset_tail_fraction: f64,
    /// Radius of the tail disk, pixels.
    pub offset_tail_range: f64,
    /// Half-peak angle range, degrees.
    pub theta_hp_range: Range,
    pub z0_range: Range,
    pub d_lamp_range: Range,
    /// Probability that a beam/distance/diameter draw uses a widened range.
    pub longtail_param_fraction: f64,
    /// Widened range adds this fraction of the width on each side.
    #[serde(default = "default_widen")]
    pub longtail_widen: f64,
    /// Image height, in pixels, at which the lengths above apply. Images of
    /// other heights get proportionally scaled parameters.
    #[serde(default = "default_reference_height")]
    pub reference_height: f64,
}

fn default_version() -> u32 {
    POLICY_SCHEMA_VERSION
}

fn default_widen() -> f64 {
    0.5
}

fn default_reference_height() -> f64 {
    1024.0
}

/// Hard limits that any widened draw is clamped into.
const THETA_HP_LIMITS_DEG: (f64, f64) = (1.0, 89.0);
const LENGTH_FLOOR: f64 = 1.0;

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self {
            schema_version: POLICY_SCHEMA_VERSION,
            temp_ranges: TemperatureRanges {
                warm: Range::new(2700.0, 4200.0),
                white: Range::new(4200.0, 5800.0),
                cool: Range::new(5800.0, 8500.0),
            },
            offset_core_sigma: 600.0,
            offset_tail_fraction: 0.15,
            offset_tail_range: 2400.0,
            theta_hp_range: Range::new(15.0, 70.0),
            z0_range: Range::new(800.0, 4000.0),
            d_lamp_range: Range::new(200.0, 1600.0),
            longtail_param_fraction: 0.05,
            longtail_widen: 0.5,
            reference_height: 1024.0,
        }
    }
}

impl SamplingPolicy {
    pub fn from_json(s: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let p: SamplingPolicy = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("policy serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Length scale from policy pixels to pixels of an image `height` tall.
    pub fn length_scale(&self, height: usize) -> f64 {
        height as f64 / self.reference_height
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |field: &'static str, message: String| Err(PolicyError::Invalid { field, message });
        if self.schema_version != POLICY_SCHEMA_VERSION {
            return Err(PolicyError::Version(self.schema_version));
        }
        let range_ok = |r: &Range| r.min.is_finite() && r.max.is_finite() && r.min < r.max;
        for v in Variant::ALL {
            let r = self.temp_ranges.get(v);
            if !range_ok(&r) || r.min < CCT_MIN_K || r.max > CCT_MAX_K {
                return bad("temp_ranges", format!("{v} range {r:?} must be non-empty within [{CCT_MIN_K}, {CCT_MAX_K}]"));
            }
        }
        if !(self.offset_core_sigma >= 0.0 && self.offset_core_sigma.is_finite()) {
            return bad("offset_core_sigma", "must be non-negative".into());
        }
        if !(self.offset_tail_range >= 0.0 && self.offset_tail_range.is_finite()) {
            return bad("offset_tail_range", "must be non-negative".into());
        }
        for (field, f) in [
            ("offset_tail_fraction", self.offset_tail_fraction),
            ("longtail_param_fraction", self.longtail_param_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(field, format!("{f} outside [0, 1]"));
            }
        }
        if !(self.longtail_widen >= 0.0 && self.longtail_widen.is_finite()) {
            return bad("longtail_widen", "must be non-negative".into());
        }
        if !(self.reference_height > 0.0 && self.reference_height.is_finite()) {
            return bad("reference_height", "must be positive".into());
        }
        let t = &self.theta_hp_range;
        if !range_ok(t) || t.min <= 0.0 || t.max >= 90.0 {
            return bad("theta_hp_range", format!("{t:?} must be non-empty within (0, 90) degrees"));
        }
        for (field, r) in [("z0_range", &self.z0_range), ("d_lamp_range", &self.d_lamp_range)] {
            if !range_ok(r) || r.min <= 0.0 {
                return bad(field, format!("{r:?} must be non-empty and positive"));
            }
        }
        Ok(())
    }
}

/// Seeded random stream. Workers derive independent streams from
/// `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        Range::new(lo, hi).sample(&mut self.inner)
    }
}

/// Long-tailed offset draw `(dx, dy)` in pixels.
pub fn sample_offset(policy: &SamplingPolicy, rng: &mut SeededRng) -> (f64, f64) {
    let rng = rng.rng();
    let tail = rng.random::<f64>() < policy.offset_tail_fraction;
    let radius = if tail {
        policy.offset_tail_range * rng.random::<f64>().sqrt()
    } else {
        let gx: f64 = StandardNormal.sample(rng);
        let gy: f64 = StandardNormal.sample(rng);
        policy.offset_core_sigma * gx.hypot(gy)
    };
    let angle = TAU * rng.random::<f64>();
    (radius * angle.cos(), radius * angle.sin())
}

fn sample_scalar(range: Range, limits: (f64, f64), policy: &SamplingPolicy, rng: &mut ChaCha8Rng) -> f64 {
    let widened = rng.random::<f64>() < policy.longtail_param_fraction;
    let r = if widened { range.widened(policy.longtail_widen).clamped(limits.0, limits.1) } else { range };
    r.sample(rng)
}

/// Draws a full parameter set for `variant`. Always returns valid parameters
/// for a valid policy.
pub fn sample_params(policy: &SamplingPolicy, variant: Variant, rng: &mut SeededRng) -> LightParams {
    for _ in 0..MAX_RETRIES {
        let t = policy.temp_ranges.get(variant).sample(rng.rng());
        let theta = sample_scalar(policy.theta_hp_range, THETA_HP_LIMITS_DEG, policy, rng.rng());
        let z0 = sample_scalar(policy.z0_range, (LENGTH_FLOOR, f64::INFINITY), policy, rng.rng());
        let d = sample_scalar(policy.d_lamp_range, (LENGTH_FLOOR, f64::INFINITY), policy, rng.rng());
        let (dx, dy) = sample_offset(policy, rng);
        if let Ok(p) = LightParams::from_degrees(t, theta, z0, d, dx, dy) {
            return p;
        }
    }
    // Midpoints of the validated core ranges are always valid.
    let mid = |r: Range| 0.5 * (r.min + r.max);
    LightParams {
        temperature: ColorTemperature::new(mid(policy.temp_ranges.get(variant))).expect("validated"),
        theta_hp: mid(policy.theta_hp_range).to_radians(),
        z0: mid(policy.z0_range),
        d_lamp: mid(policy.d_lamp_range),
        dx: 0.0,
        dy: 0.0,
    }
}

/// Gamma for the carrier target, uniform on `[0.2, 0.4]`.
pub fn sample_gamma(rng: &mut SeededRng) -> f64 {
    let (lo, hi) = crate::shading::GAMMA_RANGE;
    rng.uniform(lo, hi).clamp(lo, hi)
}
