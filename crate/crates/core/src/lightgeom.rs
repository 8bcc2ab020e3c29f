//! Emitter geometry: the six light parameters, Fibonacci-spiral samples on
//! the emitting disk, pixel-to-emitter rays and the cosine-lobe profile.
//!
//! Coordinates: image x to the right, y downward, z from the subject toward
//! the lamp. A pixel at depth `D` sits `Z0 + D` below the lamp plane. The
//! disk axis is `+z`, so the emission angle of a ray is `acos(dir.z)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{ColorTemperature, CCT_MAX_K, CCT_MIN_K};
use crate::math::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("lamp diameter must be positive and finite, got {0}")]
    BadDiameter(f64),
    #[error("half-peak angle {0} rad outside (0, pi/2)")]
    BadHalfPeak(f64),
    #[error("emitter sample coincides with the shaded point")]
    Degenerate,
}

/// One invalid field of a parameter set.
#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[error("{field}: {message}")]
pub struct ParamError {
    pub field: &'static str,
    pub message: String,
}

impl ParamError {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

/// The six fill-light controls. Lengths are in pixels, `theta_hp` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LightParamsRecord", into = "LightParamsRecord")]
pub struct LightParams {
    pub temperature: ColorTemperature,
    pub theta_hp: f64,
    pub z0: f64,
    pub d_lamp: f64,
    pub dx: f64,
    pub dy: f64,
}

/// Wire form of [`LightParams`], angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightParamsRecord {
    pub temperature_k: f64,
    pub theta_hp_deg: f64,
    pub z0: f64,
    pub d_lamp: f64,
    pub dx: f64,
    pub dy: f64,
}

impl LightParams {
    /// Builds and validates a parameter set from wire units.
    pub fn from_degrees(
        temperature_k: f64,
        theta_hp_deg: f64,
        z0: f64,
        d_lamp: f64,
        dx: f64,
        dy: f64,
    ) -> Result<Self, ParamError> {
        LightParamsRecord { temperature_k, theta_hp_deg, z0, d_lamp, dx, dy }.try_into()
    }

    /// Reports the first invalid field, if any.
    pub fn validate(&self) -> Result<(), ParamError> {
        self.field_errors().into_iter().next().map_or(Ok(()), Err)
    }

    /// Every invalid field.
    pub fn field_errors(&self) -> Vec<ParamError> {
        LightParamsRecord::from(*self).field_errors()
    }

    pub fn theta_hp_deg(&self) -> f64 {
        self.theta_hp.to_degrees()
    }

    /// Rescales every length by `s` (pyramid levels, depth unit changes).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            z0: self.z0 * s,
            d_lamp: self.d_lamp * s,
            dx: self.dx * s,
            dy: self.dy * s,
            ..*self
        }
    }
}

impl LightParamsRecord {
    pub fn field_errors(&self) -> Vec<ParamError> {
        let mut errs = Vec::new();
        if !(CCT_MIN_K..=CCT_MAX_K).contains(&self.temperature_k) {
            errs.push(ParamError::new(
                "temperature_k",
                format!("must lie in [{CCT_MIN_K}, {CCT_MAX_K}] K, got {}", self.temperature_k),
            ));
        }
        if !(self.theta_hp_deg > 0.0 && self.theta_hp_deg < 90.0) {
            errs.push(ParamError::new(
                "theta_hp_deg",
                format!("must lie in (0, 90) degrees, got {}", self.theta_hp_deg),
            ));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            errs.push(ParamError::new("z0", format!("must be positive, got {}", self.z0)));
        }
        if !(self.d_lamp > 0.0 && self.d_lamp.is_finite()) {
            errs.push(ParamError::new("d_lamp", format!("must be positive, got {}", self.d_lamp)));
        }
        if !self.dx.is_finite() {
            errs.push(ParamError::new("dx", "must be finite"));
        }
        if !self.dy.is_finite() {
            errs.push(ParamError::new("dy", "must be finite"));
        }
        errs
    }
}

impl TryFrom<LightParamsRecord> for LightParams {
    type Error = ParamError;

    fn try_from(r: LightParamsRecord) -> Result<Self, ParamError> {
        if let Some(e) = r.field_errors().into_iter().next() {
            return Err(e);
        }
        let temperature = ColorTemperature::new(r.temperature_k)
            .map_err(|e| ParamError::new("temperature_k", e.to_string()))?;
        let theta_hp = r.theta_hp_deg.to_radians();
        // Degree conversion can land exactly on pi/2 for inputs a hair below 90.
        if !(theta_hp > 0.0 && theta_hp < FRAC_PI_2) {
            return Err(ParamError::new("theta_hp_deg", "rounds outside (0, 90) degrees"));
        }
        Ok(Self {
            temperature,
            theta_hp,
            z0: r.z0,
            d_lamp: r.d_lamp,
            dx: r.dx,
            dy: r.dy,
        })
    }
}

impl From<LightParams> for LightParamsRecord {
    fn from(p: LightParams) -> Self {
        Self {
            temperature_k: p.temperature.kelvin(),
            theta_hp_deg: p.theta_hp.to_degrees(),
            z0: p.z0,
            d_lamp: p.d_lamp,
            dx: p.dx,
            dy: p.dy,
        }
    }
}

/// A point on the emitting disk relative to its center, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSample {
    pub x: f64,
    pub y: f64,
}

/// Golden angle `pi * (3 - sqrt 5)`.
pub const GOLDEN_ANGLE: f64 = PI * 0.763_932_022_500_210_3;

/// Fibonacci spiral over a disk of diameter `d_lamp`:
/// `r_k = (D/2) sqrt((k + 0.5) / n)`, `theta_k = k * golden_angle`.
pub fn sample_disk(d_lamp: f64, n: usize) -> Result<Vec<DiskSample>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::NoSamples);
    }
    if !(d_lamp > 0.0 && d_lamp.is_finite()) {
        return Err(GeometryError::BadDiameter(d_lamp));
    }
    let radius = 0.5 * d_lamp;
    let inv_n = 1.0 / n as f64;
    Ok((0..n)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) * inv_n).sqrt();
            let theta = k as f64 * GOLDEN_ANGLE;
            DiskSample { x: r * theta.cos(), y: r * theta.sin() }
        })
        .collect())
}

/// Direction and distance from a shaded point toward one emitter sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentRay {
    pub direction: Vec3,
    pub distance: f64,
    /// Angle between the disk axis and the emission direction.
    pub emit_angle: f64,
}

/// Ray from a pixel at `(x_s, y_s, depth)` (center-relative pixel coordinates)
/// to the `sample` on a lamp described by `params`.
pub fn incident_ray(
    pixel: Vec3,
    sample: DiskSample,
    params: &LightParams,
) -> Result<IncidentRay, GeometryError> {
    let v = Vec3::new(
        params.dx + sample.x - pixel.x,
        params.dy + sample.y - pixel.y,
        params.z0 + pixel.z,
    );
    let distance = v.length();
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(GeometryError::Degenerate);
    }
    let direction = v * (1.0 / distance);
    Ok(IncidentRay {
        direction,
        distance,
        emit_angle: v.x.hypot(v.y).atan2(v.z),
    })
}

/// Cosine lobe `cos^p` whose intensity halves at the half-peak angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineLobe {
    exponent: f64,
}

impl CosineLobe {
    pub fn new(theta_hp: f64) -> Result<Self, GeometryError> {
        if !(theta_hp > 0.0 && theta_hp < FRAC_PI_2) {
            return Err(GeometryError::BadHalfPeak(theta_hp));
        }
        Ok(Self { exponent: 0.5f64.ln() / theta_hp.cos().ln() })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Weight for an emission direction with axis cosine `cos_theta`.
    /// Nothing is emitted backwards.
    #[inline]
    pub fn weight_cos(&self, cos_theta: f64) -> f64 {
        if cos_theta > 0.0 {
            cos_theta.powf(self.exponent)
        } else {
            0.0
        }
    }

    pub fn weight(&self, emit_angle: f64) -> f64 {
        if emit_angle >= FRAC_PI_2 {
            0.0
        } else {
            self.weight_cos(emit_angle.cos())
        }
    }
}

pub fn emission_weight(emit_angle: f64, theta_hp: f64) -> Result<f64, GeometryError> {
    Ok(CosineLobe::new(theta_hp)?.weight(emit_angle))
}
