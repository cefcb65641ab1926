use rand::Rng;

use super::{project, random_projection, FeatureExtractor};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::seed;
use crate::transforms::{ImageRgb, Media, Modality};

const SIDE: usize = 16;
const INPUT: usize = SIDE * SIDE * 3;

/// Bilinear 16×16 thumbnail, flattened, through a fixed seeded affine
/// projection and ReLU.
///
/// The projection carries a small seeded bias so that a black image does not
/// collapse to the zero vector.
#[derive(Debug, Clone)]
pub struct ToyImageExtractor {
    seed: u64,
    weights: Matrix,
    bias: Vec<f32>,
}

impl ToyImageExtractor {
    pub fn new(seed: u64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("toy extractor dim must be >= 2, got {dim}")));
        }
        let mut rng = seed::rng(seed::derive(seed, "toy-image-bias"));
        Ok(Self {
            seed,
            weights: random_projection(seed::derive(seed, "toy-image"), dim, INPUT),
            bias: (0..dim).map(|_| rng.gen_range(0.05f32..0.25)).collect(),
        })
    }

    pub fn embed(&self, img: &ImageRgb) -> Vec<f32> {
        let thumb = downsample_bilinear(img, SIDE, SIDE);
        project(&self.weights, &self.bias, &thumb)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }
}

/// Bilinear resampling at pixel centers; returns `h × w × 3` values.
pub fn downsample_bilinear(img: &ImageRgb, h: usize, w: usize) -> Vec<f32> {
    let (src_h, src_w) = (img.height(), img.width());
    let coord = |i: usize, out: usize, src: usize| -> (usize, usize, f32) {
        let pos = ((i as f32 + 0.5) * src as f32 / out as f32 - 0.5).clamp(0.0, (src - 1) as f32);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(src - 1);
        (lo, hi, pos - lo as f32)
    };
    let mut out = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        let (y0, y1, fy) = coord(y, h, src_h);
        for x in 0..w {
            let (x0, x1, fx) = coord(x, w, src_w);
            let (a, b, c, d) = (img.pixel(y0, x0), img.pixel(y0, x1), img.pixel(y1, x0), img.pixel(y1, x1));
            for ch in 0..3 {
                let top = a[ch] * (1.0 - fx) + b[ch] * fx;
                let bottom = c[ch] * (1.0 - fx) + d[ch] * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    out
}

impl FeatureExtractor for ToyImageExtractor {
    fn id(&self) -> String {
        format!("toy-image-d{}-s{}", self.bias.len(), self.seed)
    }

    fn dim(&self) -> usize {
        self.bias.len()
    }

    fn modality(&self) -> Modality {
        Modality::Image
    }

    fn extract(&self, media: &Media) -> Result<Vec<f32>> {
        match media {
            Media::Image(img) => Ok(self.embed(img)),
            other => Err(Error::Config(format!(
                "{} cannot embed {} media",
                self.id(),
                other.modality()
            ))),
        }
    }
}
