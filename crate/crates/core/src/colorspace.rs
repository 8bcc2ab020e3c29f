//! Color math: sRGB transfer curves, linear-RGB luminance and correlated
//! color temperature to light color.
//!
//! Scalars are `f64` throughout; rasters elsewhere store `f32`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColorError {
    #[error("sRGB channel {0} outside [0, 1]")]
    SrgbOutOfRange(f64),
    #[error("linear channel {0} is negative or not finite")]
    InvalidLinear(f64),
    #[error("color temperature {0} K outside [{min}, {max}] K", min = CCT_MIN_K, max = CCT_MAX_K)]
    TemperatureOutOfRange(f64),
}

/// Lower validity bound of the CCT chromaticity polynomial.
pub const CCT_MIN_K: f64 = 1667.0;
/// Upper validity bound of the CCT chromaticity polynomial.
pub const CCT_MAX_K: f64 = 25000.0;

/// Rec. 709 / sRGB luminance weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

const SRGB_DECODE_THRESHOLD: f64 = 0.04045;
const SRGB_ENCODE_THRESHOLD: f64 = 0.04045 / 12.92;

/// XYZ (D65) to linear sRGB, IEC 61966-2-1.
const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
];

/// Linear-light RGB with sRGB primaries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// Display-encoded sRGB, every channel in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SrgbColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// CIE 1931 tristimulus values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XyzColor {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Correlated color temperature in kelvin, within the polynomial's range.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ColorTemperature(f64);

impl ColorTemperature {
    pub fn new(kelvin: f64) -> Result<Self, ColorError> {
        if (CCT_MIN_K..=CCT_MAX_K).contains(&kelvin) {
            Ok(Self(kelvin))
        } else {
            Err(ColorError::TemperatureOutOfRange(kelvin))
        }
    }

    pub fn kelvin(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for ColorTemperature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let k = f64::deserialize(d)?;
        ColorTemperature::new(k).map_err(serde::de::Error::custom)
    }
}

impl LinearRgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub const fn splat(v: f64) -> Self {
        Self { r: v, g: v, b: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn luminance(self) -> f64 {
        luminance(self)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.r * s, self.g * s, self.b * s)
    }
}

impl From<[f64; 3]> for LinearRgb {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl SrgbColor {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, ColorError> {
        for c in [r, g, b] {
            check_srgb(c)?;
        }
        Ok(Self { r, g, b })
    }
}

#[inline]
fn check_srgb(c: f64) -> Result<f64, ColorError> {
    if (0.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(ColorError::SrgbOutOfRange(c))
    }
}

/// sRGB decode of one channel. Rejects values outside `[0, 1]`.
pub fn srgb_channel_to_linear(c: f64) -> Result<f64, ColorError> {
    check_srgb(c).map(decode_unchecked)
}

/// sRGB encode of one channel; values above 1 saturate at 1.
pub fn linear_channel_to_srgb(c: f64) -> Result<f64, ColorError> {
    if c >= 0.0 && c.is_finite() {
        Ok(encode_unchecked(c))
    } else {
        Err(ColorError::InvalidLinear(c))
    }
}

#[inline]
pub(crate) fn decode_unchecked(c: f64) -> f64 {
    if c <= SRGB_DECODE_THRESHOLD {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub(crate) fn encode_unchecked(c: f64) -> f64 {
    let c = c.min(1.0);
    if c <= SRGB_ENCODE_THRESHOLD {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_linear(c: SrgbColor) -> Result<LinearRgb, ColorError> {
    Ok(LinearRgb::new(
        srgb_channel_to_linear(c.r)?,
        srgb_channel_to_linear(c.g)?,
        srgb_channel_to_linear(c.b)?,
    ))
}

pub fn linear_to_srgb(c: LinearRgb) -> Result<SrgbColor, ColorError> {
    Ok(SrgbColor {
        r: linear_channel_to_srgb(c.r)?,
        g: linear_channel_to_srgb(c.g)?,
        b: linear_channel_to_srgb(c.b)?,
    })
}

#[inline]
pub fn luminance(c: LinearRgb) -> f64 {
    LUMA_WEIGHTS[0] * c.r + LUMA_WEIGHTS[1] * c.g + LUMA_WEIGHTS[2] * c.b
}

/// CIE xy chromaticity of a Planckian radiator, cubic spline fit of
/// Kang et al. (2002).
pub fn cct_chromaticity(t: ColorTemperature) -> (f64, f64) {
    let k = t.kelvin();
    let (k1, k2, k3) = (1e3 / k, 1e6 / (k * k), 1e9 / (k * k * k));
    let x = if k <= 4000.0 {
        -0.2661239 * k3 - 0.2343589 * k2 + 0.8776956 * k1 + 0.179910
    } else {
        -3.0258469 * k3 + 2.1070379 * k2 + 0.2226347 * k1 + 0.240390
    };
    let (x2, x3) = (x * x, x * x * x);
    let y = if k <= 2222.0 {
        -1.1063814 * x3 - 1.34811020 * x2 + 2.18555832 * x - 0.20219683
    } else if k <= 4000.0 {
        -0.9549476 * x3 - 1.37418593 * x2 + 2.09137015 * x - 0.16748867
    } else {
        3.0817580 * x3 - 5.87338670 * x2 + 3.75112997 * x - 0.37001483
    };
    (x, y)
}

/// Light color for a temperature, lifted to XYZ with `Y = 1`.
pub fn cct_to_xyz(t: ColorTemperature) -> XyzColor {
    let (x, y) = cct_chromaticity(t);
    XyzColor {
        x: x / y,
        y: 1.0,
        z: (1.0 - x - y) / y,
    }
}

/// XYZ to linear sRGB; out-of-gamut negatives clamp to zero.
pub fn xyz_to_linear_rgb(c: XyzColor) -> LinearRgb {
    let v = [c.x, c.y, c.z];
    let row = |m: [f64; 3]| (m[0] * v[0] + m[1] * v[1] + m[2] * v[2]).max(0.0);
    LinearRgb::new(row(XYZ_TO_SRGB[0]), row(XYZ_TO_SRGB[1]), row(XYZ_TO_SRGB[2]))
}

/// Linear RGB of a luminance-normalized light at temperature `t`.
pub fn light_color(t: ColorTemperature) -> LinearRgb {
    xyz_to_linear_rgb(cct_to_xyz(t))
}
