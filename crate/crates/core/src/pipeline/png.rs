//! 8-bit PNG conversion for unit-range rasters.

use std::io::Cursor;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageReader};
use thiserror::Error;

use crate::raster::{Raster, Rgb32};

#[derive(Debug, Error)]
#[error("png: {0}")]
pub struct PngError(String);

impl From<image::ImageError> for PngError {
    fn from(e: image::ImageError) -> Self {
        PngError(e.to_string())
    }
}

#[inline]
pub fn quantize(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode(w: usize, h: usize, bytes: &[u8], color: ExtendedColorType) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(bytes, w as u32, h as u32, color)
        .expect("in-memory png write");
    out
}

pub fn encode_rgb(r: &Raster<Rgb32>) -> Vec<u8> {
    let bytes: Vec<u8> = r.pixels().iter().flat_map(|p| p.map(quantize)).collect();
    encode(r.width(), r.height(), &bytes, ExtendedColorType::Rgb8)
}

pub fn encode_gray(r: &Raster<f32>) -> Vec<u8> {
    let bytes: Vec<u8> = r.pixels().iter().map(|&v| quantize(v)).collect();
    encode(r.width(), r.height(), &bytes, ExtendedColorType::L8)
}

pub fn encode_mask(m: &Raster<bool>) -> Vec<u8> {
    encode_gray(&m.map(|&b| if b { 1.0 } else { 0.0 }))
}

fn open(bytes: &[u8]) -> Result<image::DynamicImage, PngError> {
    Ok(ImageReader::with_format(Cursor::new(bytes), image::ImageFormat::Png).decode()?)
}

/// Decodes any PNG color type to RGB in `[0, 1]`. 16-bit files are reduced
/// to 8 bits.
pub fn decode_rgb(bytes: &[u8]) -> Result<Raster<Rgb32>, PngError> {
    let img = open(bytes)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels().map(|p| p.0.map(|c| c as f32 / 255.0)).collect();
    Ok(Raster::from_vec(w, h, px).expect("shape"))
}

/// Decodes a PNG to 8-bit gray levels.
pub fn decode_gray8(bytes: &[u8]) -> Result<Raster<u8>, PngError> {
    let img = open(bytes)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Raster::from_vec(w, h, img.into_raw()).expect("shape"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_round_trip_is_exact_on_levels() {
        let r = Raster::from_fn(5, 3, |x, y| [x as f32 / 4.0, y as f32 / 2.0, 0.2]);
        let back = decode_rgb(&encode_rgb(&r)).unwrap();
        for (a, b) in r.pixels().iter().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-7);
            }
        }
        assert_eq!(encode_rgb(&back), encode_rgb(&decode_rgb(&encode_rgb(&back)).unwrap()));
    }

    #[test]
    fn mask_round_trip() {
        let m = Raster::from_fn(4, 4, |x, y| x > y);
        let g = decode_gray8(&encode_mask(&m)).unwrap();
        assert_eq!(g.map(|&v| v > 127), m);
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(-1.0), 0);
        assert_eq!(quantize(2.0), 255);
        assert_eq!(quantize(f32::NAN), 0);
        assert_eq!(quantize(0.5), 128);
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(decode_rgb(b"not a png").is_err());
    }
}
