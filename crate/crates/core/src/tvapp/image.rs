//! Intensity images and their file formats.
//!
//! Pixels are stored column-major ((i, j) ↦ i + j·m) as `f64` intensities
//! nominally in [0, 1]. Solver iterates stay unclamped; clamping and the
//! [0,1] ↔ [0,255] linear quantization happen only at PGM output
//! (binary P5, maxval 255, row-major on disk). Restored images are also
//! dumped as raw little-endian `f64` in column-major order for lossless
//! regression comparisons.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimMismatch(usize, usize, usize, usize),
    #[error("bad pgm file: {0}")]
    BadPgm(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImageError + '_ {
    move |source| ImageError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub m: usize,
    pub n: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(m: usize, n: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), m * n, "pixel storage size");
        Image { m, n, pixels }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Image::new(m, n, vec![0.0; m * n])
    }

    pub fn constant(m: usize, n: usize, v: f64) -> Self {
        Image::new(m, n, vec![v; m * n])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i + j * self.m]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.pixels[i + j * self.m] = v;
    }

    pub fn clamped(&self) -> Image {
        Image::new(
            self.m,
            self.n,
            self.pixels.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        )
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), ImageError> {
        let mut buf = Vec::with_capacity(self.m * self.n + 32);
        // width = n columns, height = m rows
        buf.extend_from_slice(format!("P5\n{} {}\n255\n", self.n, self.m).as_bytes());
        for i in 0..self.m {
            for j in 0..self.n {
                let v = (self.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8;
                buf.push(v);
            }
        }
        std::fs::write(path, buf).map_err(io_err(path))
    }

    pub fn read_pgm(path: &Path) -> Result<Image, ImageError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(io_err(path))?
            .read_to_end(&mut bytes)
            .map_err(io_err(path))?;
        parse_pgm(&bytes).map_err(|msg| ImageError::BadPgm(format!("{}: {msg}", path.display())))
    }

    pub fn write_raw_f64(&self, path: &Path) -> Result<(), ImageError> {
        let mut f = std::fs::File::create(path).map_err(io_err(path))?;
        let mut buf = Vec::with_capacity(self.pixels.len() * 8);
        for v in &self.pixels {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&buf).map_err(io_err(path))
    }

    pub fn read_raw_f64(path: &Path, m: usize, n: usize) -> Result<Image, ImageError> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        if bytes.len() != m * n * 8 {
            return Err(ImageError::BadPgm(format!(
                "raw dump has {} bytes, expected {} for {m}x{n}",
                bytes.len(),
                m * n * 8
            )));
        }
        let pixels = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Image::new(m, n, pixels))
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<Image, String> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String, String> {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("unexpected end of header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(bytes)?;
    if magic != "P5" {
        return Err(format!("expected P5 magic, got {magic:?}"));
    }
    let width: usize = token(bytes)?.parse().map_err(|e| format!("width: {e}"))?;
    let height: usize = token(bytes)?.parse().map_err(|e| format!("height: {e}"))?;
    let maxval: usize = token(bytes)?.parse().map_err(|e| format!("maxval: {e}"))?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(format!(
            "raster truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        ));
    }
    let (m, n) = (height, width);
    let mut img = Image::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            img.set(i, j, bytes[pos + i * n + j] as f64 / maxval as f64);
        }
    }
    Ok(img)
}

/// Peak signal-to-noise ratio in dB: 10·log₁₀(max_ref² / MSE) with the
/// squared-error MSE, reported as the 99 dB sentinel when MSE is zero.
pub fn psnr(reference: &Image, restored: &Image) -> Result<f64, ImageError> {
    if (reference.m, reference.n) != (restored.m, restored.n) {
        return Err(ImageError::DimMismatch(
            reference.m,
            reference.n,
            restored.m,
            restored.n,
        ));
    }
    let mn = (reference.m * reference.n) as f64;
    let mse = reference
        .pixels
        .iter()
        .zip(&restored.pixels)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / mn;
    if mse == 0.0 {
        return Ok(99.0);
    }
    let max_ref = reference.pixels.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(10.0 * (max_ref * max_ref / mse).log10())
}

/// Deterministic piecewise-constant test scene: flat background with a
/// rectangle, a disk and a bar at distinct intensities.
pub fn synthetic_piecewise_constant(m: usize, n: usize) -> Image {
    let mut img = Image::constant(m, n, 0.15);
    let (mf, nf) = (m as f64, n as f64);
    for j in 0..n {
        for i in 0..m {
            let (x, y) = (i as f64 / mf, j as f64 / nf);
            if (0.18..0.52).contains(&x) && (0.12..0.48).contains(&y) {
                img.set(i, j, 0.85);
            }
            let (dx, dy) = (x - 0.68, y - 0.68);
            if (dx * dx + dy * dy).sqrt() < 0.17 {
                img.set(i, j, 0.5);
            }
            if (0.76..0.88).contains(&x) && (0.08..0.42).contains(&y) {
                img.set(i, j, 1.0);
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_hand_values() {
        let ones = Image::constant(4, 4, 1.0);
        assert_eq!(psnr(&ones, &ones).unwrap(), 99.0);
        let dim = Image::constant(4, 4, 0.9);
        let db = psnr(&ones, &dim).unwrap();
        assert!((db - 20.0).abs() < 1e-10, "psnr {db}");
        let other = Image::zeros(3, 4);
        assert!(psnr(&ones, &other).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = synthetic_piecewise_constant(13, 9);
        img.write_pgm(&path).unwrap();
        let back = Image::read_pgm(&path).unwrap();
        assert_eq!((back.m, back.n), (13, 9));
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn raw_dump_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.f64");
        let mut img = synthetic_piecewise_constant(6, 7);
        img.set(2, 3, -0.25); // out-of-range survives the raw dump
        img.write_raw_f64(&path).unwrap();
        let back = Image::read_raw_f64(&path, 6, 7).unwrap();
        assert_eq!(img, back);
    }
}
