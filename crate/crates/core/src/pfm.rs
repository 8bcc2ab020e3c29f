//! Portable float map codec.
//!
//! Written files are always little-endian (`-1.0` scale) with rows stored
//! bottom to top. Both byte orders are accepted when reading.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::raster::{Raster, Rgb32};

#[derive(Debug, Error)]
pub enum PfmError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("expected {expected} channel(s), file has {found}")]
    Channels { expected: usize, found: usize },
    #[error("truncated pixel data")]
    Truncated,
}

/// Raw decoded map: channel count, shape and top-to-bottom samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

fn header_token(r: &mut impl BufRead) -> Result<String, PfmError> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        if byte[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(byte[0]);
        if tok.len() > 64 {
            return Err(PfmError::Header("token too long".into()));
        }
    }
    String::from_utf8(tok).map_err(|_| PfmError::Header("non-ascii header".into()))
}

pub fn decode(mut r: impl BufRead) -> Result<FloatMap, PfmError> {
    let channels = match header_token(&mut r)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(PfmError::Header(format!("bad magic {other:?}"))),
    };
    let parse_dim = |s: String| {
        s.parse::<usize>().map_err(|_| PfmError::Header(format!("bad dimension {s:?}")))
    };
    let width = parse_dim(header_token(&mut r)?)?;
    let height = parse_dim(header_token(&mut r)?)?;
    let scale_tok = header_token(&mut r)?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| PfmError::Header(format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(PfmError::Header("zero scale".into()));
    }
    if width == 0 || height == 0 || width.saturating_mul(height) > 1 << 28 {
        return Err(PfmError::Header(format!("unsupported size {width}x{height}")));
    }
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut bytes = vec![0u8; row_len * height * 4];
    r.read_exact(&mut bytes).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => PfmError::Truncated,
        _ => PfmError::Io(e),
    })?;
    let mut data = vec![0f32; row_len * height];
    for (file_row, chunk) in bytes.chunks_exact(row_len * 4).enumerate() {
        let out_row = height - 1 - file_row;
        let dst = &mut data[out_row * row_len..(out_row + 1) * row_len];
        for (d, b) in dst.iter_mut().zip(chunk.chunks_exact(4)) {
            let b = [b[0], b[1], b[2], b[3]];
            *d = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        }
    }
    Ok(FloatMap { channels, width, height, data })
}

pub fn encode(map: &FloatMap, mut w: impl Write) -> Result<(), PfmError> {
    let magic = match map.channels {
        1 => "Pf",
        3 => "PF",
        n => return Err(PfmError::Channels { expected: 3, found: n }),
    };
    write!(w, "{magic}\n{} {}\n-1.0\n", map.width, map.height)?;
    let row_len = map.width * map.channels;
    let mut buf = Vec::with_capacity(row_len * 4);
    for row in (0..map.height).rev() {
        buf.clear();
        for v in &map.data[row * row_len..(row + 1) * row_len] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn encode_gray(r: &Raster<f32>) -> Vec<u8> {
    let map = FloatMap { channels: 1, width: r.width(), height: r.height(), data: r.pixels().to_vec() };
    let mut out = Vec::new();
    encode(&map, &mut out).expect("in-memory write");
    out
}

pub fn encode_rgb(r: &Raster<Rgb32>) -> Vec<u8> {
    let map = FloatMap {
        channels: 3,
        width: r.width(),
        height: r.height(),
        data: r.pixels().iter().flatten().copied().collect(),
    };
    let mut out = Vec::new();
    encode(&map, &mut out).expect("in-memory write");
    out
}

pub fn decode_gray(bytes: &[u8]) -> Result<Raster<f32>, PfmError> {
    let m = decode(bytes)?;
    if m.channels != 1 {
        return Err(PfmError::Channels { expected: 1, found: m.channels });
    }
    Ok(Raster::from_vec(m.width, m.height, m.data).expect("shape from header"))
}

pub fn decode_rgb(bytes: &[u8]) -> Result<Raster<Rgb32>, PfmError> {
    let m = decode(bytes)?;
    if m.channels != 3 {
        return Err(PfmError::Channels { expected: 3, found: m.channels });
    }
    let px = m.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(Raster::from_vec(m.width, m.height, px).expect("shape from header"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_exact() {
        let r = Raster::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_gray(&r);
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
        // Bottom row first.
        let body = &bytes[12..];
        assert_eq!(&body[0..4], &3.0f32.to_le_bytes());
        assert_eq!(body.len(), 16);
    }

    #[test]
    fn reads_big_endian() {
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        bytes.extend_from_slice(&5.0f32.to_be_bytes());
        bytes.extend_from_slice(&7.0f32.to_be_bytes());
        let r = decode_gray(&bytes).unwrap();
        assert_eq!(r.pixels(), &[7.0, 5.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode_gray(b"P6\n1 1\n255\n"), Err(PfmError::Header(_))));
        assert!(matches!(decode_gray(b"Pf\n2 2\n-1.0\n\0\0\0\0"), Err(PfmError::Truncated)));
        let rgb = encode_rgb(&Raster::filled(1, 1, [0.0; 3]));
        assert!(matches!(decode_gray(&rgb), Err(PfmError::Channels { expected: 1, found: 3 })));
    }

    proptest! {
        #[test]
        fn rgb_round_trip(w in 1usize..6, h in 1usize..6, seed in any::<u32>()) {
            let r = Raster::from_fn(w, h, |x, y| {
                let v = (seed as f32) * 1e-3 + (x * 7 + y * 13) as f32;
                [v, -v, v * 0.5]
            });
            prop_assert_eq!(decode_rgb(&encode_rgb(&r)).unwrap(), r);
        }
    }
}
