//! Row-major 2D rasters.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("raster shape mismatch: {what} is {found:?}, expected {expected:?}")]
pub struct ShapeError {
    pub what: String,
    pub expected: (usize, usize),
    pub found: (usize, usize),
}

/// Width by height grid of pixels, row-major, origin top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<P> {
    width: usize,
    height: usize,
    pixels: Vec<P>,
}

pub type Rgb32 = [f32; 3];

impl<P: Copy> Raster<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> Raster<Q> {
        Raster { width: self.width, height: self.height, pixels: self.pixels.iter().map(f).collect() }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> P {
        self.pixels[y * self.width + x]
    }
}

impl<P> Raster<P> {
    /// Wraps `pixels`; `None` when the length disagrees with the shape.
    pub fn from_vec(width: usize, height: usize, pixels: Vec<P>) -> Option<Self> {
        (pixels.len() == width * height).then_some(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[P] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [P] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<P> {
        self.pixels
    }

    pub fn set(&mut self, x: usize, y: usize, v: P) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn expect_dims(&self, what: &str, expected: (usize, usize)) -> Result<(), ShapeError> {
        if self.dims() == expected {
            Ok(())
        } else {
            Err(ShapeError { what: what.to_string(), expected, found: self.dims() })
        }
    }
}

impl Raster<f32> {
    /// Bilinear lookup at continuous coordinates where pixel `(i, j)` covers
    /// `[i, i+1) x [j, j+1)` and its value sits at the center. `None` outside
    /// the raster.
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x < w && y < h) {
            return None;
        }
        let fx = (x - 0.5).clamp(0.0, w - 1.0);
        let fy = (y - 0.5).clamp(0.0, h - 1.0);
        let x0 = fx as usize;
        let y0 = fy as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let row0 = y0 * self.width;
        let row1 = y1 * self.width;
        let p = &self.pixels;
        let top = p[row0 + x0] as f64 * (1.0 - tx) + p[row0 + x1] as f64 * tx;
        let bottom = p[row1 + x0] as f64 * (1.0 - tx) + p[row1 + x1] as f64 * tx;
        Some(top * (1.0 - ty) + bottom * ty)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.pixels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Pixel types that can be averaged.
pub trait Blend: Copy + Default {
    fn add_weighted(&mut self, other: Self, w: f32);
    fn scaled(self, s: f32) -> Self;
}

impl Blend for f32 {
    fn add_weighted(&mut self, other: f32, w: f32) {
        *self += other * w;
    }
    fn scaled(self, s: f32) -> f32 {
        self * s
    }
}

impl Blend for Rgb32 {
    fn add_weighted(&mut self, other: Rgb32, w: f32) {
        for c in 0..3 {
            self[c] += other[c] * w;
        }
    }
    fn scaled(self, s: f32) -> Rgb32 {
        [self[0] * s, self[1] * s, self[2] * s]
    }
}

/// Overlap weights of each destination cell with the source cells along one
/// axis, for box (area) resampling.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f32)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * ratio;
            let hi = (i + 1) as f64 * ratio;
            let mut taps = Vec::new();
            let mut j = lo.floor() as usize;
            while (j as f64) < hi && j < src {
                let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)) / ratio;
                if overlap > 0.0 {
                    taps.push((j, overlap as f32));
                }
                j += 1;
            }
            taps
        })
        .collect()
}

impl<P: Blend> Raster<P> {
    /// Area-averaging resample to `new_w` by `new_h`.
    pub fn resize_area(&self, new_w: usize, new_h: usize) -> Raster<P> {
        if (new_w, new_h) == self.dims() {
            return self.clone();
        }
        let wx = area_weights(self.width, new_w);
        let wy = area_weights(self.height, new_h);
        let mut tmp = Vec::with_capacity(new_w * self.height);
        for y in 0..self.height {
            let row = &self.pixels[y * self.width..(y + 1) * self.width];
            for taps in &wx {
                let mut acc = P::default();
                for &(j, w) in taps {
                    acc.add_weighted(row[j], w);
                }
                tmp.push(acc);
            }
        }
        let mut out = Vec::with_capacity(new_w * new_h);
        for taps in &wy {
            for x in 0..new_w {
                let mut acc = P::default();
                for &(j, w) in taps {
                    acc.add_weighted(tmp[j * new_w + x], w);
                }
                out.push(acc);
            }
        }
        Raster { width: new_w, height: new_h, pixels: out }
    }
}

/// Shape that fits `(w, h)` into a `max_side` square, keeping aspect ratio.
/// Never upsamples.
pub fn fit_within(w: usize, h: usize, max_side: usize) -> (usize, usize) {
    let long = w.max(h);
    if long <= max_side {
        return (w, h);
    }
    let s = max_side as f64 / long as f64;
    (((w as f64 * s).round() as usize).max(1), ((h as f64 * s).round() as usize).max(1))
}
