//! Feature extractors: media in, fixed-dimension embedding out.

mod external;
mod factor;
mod toy_audio;
mod toy_image;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub(crate) use external::align;
pub use external::external_embeddings;
pub use factor::{FactorExtractor, FactorLayout};
pub use toy_audio::ToyAudioExtractor;
pub use toy_image::ToyImageExtractor;

use crate::error::Result;
use crate::numerics::Matrix;
use crate::seed;
use crate::transforms::{Media, Modality};

/// Maps a data sample to an embedding. Implementations are deterministic:
/// the same input always yields the same vector.
pub trait FeatureExtractor: Send + Sync {
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn modality(&self) -> Modality;
    fn extract(&self, media: &Media) -> Result<Vec<f32>>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyExtractorConfig {
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub modality: Modality,
}

fn default_dim() -> usize {
    64
}

impl ToyExtractorConfig {
    pub fn build(&self) -> Result<Box<dyn FeatureExtractor>> {
        match self.modality {
            Modality::Image => Ok(Box::new(ToyImageExtractor::new(self.seed, self.dim)?)),
            Modality::Audio => Ok(Box::new(ToyAudioExtractor::new(self.seed, self.dim)?)),
            Modality::Factors => Err(crate::Error::Config(
                "toy extractors exist for image and audio; use a factor extractor for synthetic factors".into(),
            )),
        }
    }
}

/// Gaussian `rows × cols` matrix scaled by `1/√cols`.
pub(crate) fn random_projection(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = seed::rng(seed);
    let scale = 1.0 / (cols as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            (v * scale) as f32
        })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

pub(crate) fn project(weights: &Matrix, bias: &[f32], input: &[f32]) -> Vec<f32> {
    weights
        .row_iter()
        .zip(bias)
        .map(|(w, b)| (crate::numerics::Matrix::dot_rows(w, input) + *b as f64) as f32)
        .collect()
}
