//! HSV colour transforms, JPEG round trips and mean-HSV ground truth.

use std::f64::consts::TAU;
use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};

pub const HUE_RANGE: (f64, f64) = (-0.5, 0.5);
pub const SHIFT_RANGE: (f64, f64) = (-2.0, 2.0);
pub const JPEG_RANGE: (f64, f64) = (0.0, 100.0);

/// Row-major `H×W×3` RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
}

/// Same layout as [`ImageRgb`] with channels `(h, s, v)`, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
}

impl ImageRgb {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Validation(format!("image must be at least 1x1, got {height}x{width}")));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::shape(height * width * 3, pixels.len()));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, pixels })
    }

    /// Builds an image from a per-pixel function returning `[r, g, b]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend(f(y, x).map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let bytes = self.pixels.iter().map(|v| (v * 255.0).round() as u8).collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, bytes).expect("buffer sized by construction")
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        Self {
            height: img.height() as usize,
            width: img.width() as usize,
            pixels: img.as_raw().iter().map(|b| *b as f32 / 255.0).collect(),
        }
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Codec(format!("{}: {e}", path.display())))?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save_with_format(path, ImageFormat::Png)
            .map_err(|e| Error::Codec(format!("{}: {e}", path.display())))
    }
}

impl HsvImage {
    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    fn map(&self, f: impl Fn([f32; 3]) -> [f32; 3]) -> Self {
        let mut pixels = self.pixels.clone();
        for px in pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&f([px[0], px[1], px[2]]));
        }
        Self {
            height: self.height,
            width: self.width,
            pixels,
        }
    }
}

/// Hexcone RGB to HSV; hue is 0 for achromatic pixels.
pub fn pixel_rgb_to_hsv([r, g, b]: [f32; 3]) -> [f32; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > 0.0 { chroma / max } else { 0.0 };
    let h = if chroma <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / chroma).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / chroma + 2.0) / 6.0
    } else {
        ((r - g) / chroma + 4.0) / 6.0
    };
    [wrap_unit(h), s, max]
}

pub fn pixel_hsv_to_rgb([h, s, v]: [f32; 3]) -> [f32; 3] {
    let h6 = wrap_unit(h) * 6.0;
    let sector = (h6.floor() as i32).rem_euclid(6);
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let rgb = match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    rgb.map(|c| c.clamp(0.0, 1.0))
}

fn wrap_unit(h: f32) -> f32 {
    let w = h.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn rgb_to_hsv(img: &ImageRgb) -> HsvImage {
    let mut pixels = img.pixels.clone();
    for px in pixels.chunks_exact_mut(3) {
        px.copy_from_slice(&pixel_rgb_to_hsv([px[0], px[1], px[2]]));
    }
    HsvImage {
        height: img.height,
        width: img.width,
        pixels,
    }
}

pub fn hsv_to_rgb(hsv: &HsvImage) -> Result<ImageRgb> {
    if let Some(v) = hsv.pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Validation(format!("HSV channel value {v} outside [0, 1]")));
    }
    let mut pixels = hsv.pixels.clone();
    for px in pixels.chunks_exact_mut(3) {
        px.copy_from_slice(&pixel_hsv_to_rgb([px[0], px[1], px[2]]));
    }
    ImageRgb::new(hsv.height, hsv.width, pixels)
}

fn check(what: &'static str, value: f64, (min, max): (f64, f64)) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::Parameter { what, value, min, max })
    }
}

/// Rotates hue by `h` turns: `H' = (H + h) mod 1`.
pub fn hue_shift(img: &ImageRgb, h: f64) -> Result<ImageRgb> {
    check("hue shift", h, HUE_RANGE)?;
    let h = h as f32;
    hsv_to_rgb(&rgb_to_hsv(img).map(|[hue, s, v]| [wrap_unit(hue + h), s, v]))
}

/// Adds `s` to the saturation channel, clamped to `[0, 1]`.
pub fn saturation_shift(img: &ImageRgb, s: f64) -> Result<ImageRgb> {
    check("saturation shift", s, SHIFT_RANGE)?;
    let s = s as f32;
    hsv_to_rgb(&rgb_to_hsv(img).map(|[h, sat, v]| [h, (sat + s).clamp(0.0, 1.0), v]))
}

/// Adds `b` to the value channel, clamped to `[0, 1]`.
pub fn brightness_shift(img: &ImageRgb, b: f64) -> Result<ImageRgb> {
    check("brightness shift", b, SHIFT_RANGE)?;
    let b = b as f32;
    hsv_to_rgb(&rgb_to_hsv(img).map(|[h, s, v]| [h, s, (v + b).clamp(0.0, 1.0)]))
}

/// Codec quality for a requested factor: rounded, with 0 raised to 1.
pub fn jpeg_quality(q: f64) -> u8 {
    (q.round() as i64).clamp(1, 100) as u8
}

/// Baseline JPEG encode at quality `q` followed by a decode.
pub fn jpeg_compress(img: &ImageRgb, q: f64) -> Result<ImageRgb> {
    check("jpeg quality", q, JPEG_RANGE)?;
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, jpeg_quality(q))
        .encode_image(&img.to_rgb8())
        .map_err(|e| Error::Codec(format!("jpeg encode: {e}")))?;
    let decoded = image::load(Cursor::new(buf), ImageFormat::Jpeg)
        .map_err(|e| Error::Codec(format!("jpeg decode: {e}")))?
        .to_rgb8();
    if decoded.width() as usize != img.width || decoded.height() as usize != img.height {
        return Err(Error::Codec("jpeg round trip changed image size".into()));
    }
    Ok(ImageRgb::from_rgb8(&decoded))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvMeans {
    /// Circular mean of hue in `[0, 1)`.
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
    /// Set when hue angles cancel and the circular mean has no direction;
    /// `hue` is then reported as 0.
    pub hue_degenerate: bool,
}

pub fn mean_hsv(img: &ImageRgb) -> HsvMeans {
    let hsv = rgb_to_hsv(img);
    let n = (img.height * img.width) as f64;
    let (mut sin, mut cos, mut sat, mut val) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for px in hsv.pixels.chunks_exact(3) {
        let angle = TAU * px[0] as f64;
        sin += angle.sin();
        cos += angle.cos();
        sat += px[1] as f64;
        val += px[2] as f64;
    }
    let (sin, cos) = (sin / n, cos / n);
    let resultant = sin.hypot(cos);
    let hue_degenerate = resultant < 1e-6;
    let hue = if hue_degenerate {
        0.0
    } else {
        let h = (sin.atan2(cos) / TAU).rem_euclid(1.0);
        if h >= 1.0 {
            0.0
        } else {
            h
        }
    };
    HsvMeans {
        hue,
        saturation: sat / n,
        value: val / n,
        hue_degenerate,
    }
}
