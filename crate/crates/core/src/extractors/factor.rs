use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{random_projection, FeatureExtractor};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::seed;
use crate::transforms::{Media, Modality};

/// Noise on dimensions that carry a factor.
pub const FACTOR_NOISE_SIGMA: f64 = 0.01;
/// Scale of the pure-noise filler dimensions.
pub const FILLER_SIGMA: f64 = 0.1;

/// How factor values are laid out in latent space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorLayout {
    /// Factor `k` fills its own block of `block_dims[k]` dimensions.
    Disentangled { block_dims: Vec<usize> },
    /// Every factor is summed into the same `shared_dims` dimensions and the
    /// whole vector is then rotated by a seeded orthogonal matrix, so no
    /// linear read-out separates the factors.
    Entangled { shared_dims: usize },
}

/// Writes a factor vector straight into a `dim`-dimensional embedding.
///
/// Noise is a deterministic function of the seed and the exact factor
/// values, so the extractor is a pure function of its input.
#[derive(Debug, Clone)]
pub struct FactorExtractor {
    layout: FactorLayout,
    dim: usize,
    n_factors: usize,
    seed: u64,
    rotation: Option<Matrix>,
}

/// Orthonormal rows by Gram-Schmidt on a seeded Gaussian matrix.
fn random_rotation(seed: u64, n: usize) -> Matrix {
    let g = random_projection(seed, n, n);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for r in g.row_iter() {
        let mut v: Vec<f64> = r.iter().map(|x| *x as f64).collect();
        for q in &rows {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        rows.push(v);
    }
    let data = rows.into_iter().flatten().map(|v| v as f32).collect();
    Matrix::from_vec(n, n, data).expect("square")
}

impl FactorExtractor {
    pub fn new(layout: FactorLayout, n_factors: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 || n_factors == 0 {
            return Err(Error::Config(format!(
                "factor extractor needs dim >= 2 and >= 1 factor (dim {dim}, factors {n_factors})"
            )));
        }
        let rotation = match &layout {
            FactorLayout::Disentangled { block_dims } => {
                if block_dims.len() != n_factors || block_dims.contains(&0) {
                    return Err(Error::Config(format!(
                        "need one non-empty block per factor, got {block_dims:?} for {n_factors} factors"
                    )));
                }
                if block_dims.iter().sum::<usize>() > dim {
                    return Err(Error::Config(format!("blocks {block_dims:?} exceed dim {dim}")));
                }
                None
            }
            FactorLayout::Entangled { shared_dims } => {
                if *shared_dims == 0 || *shared_dims > dim {
                    return Err(Error::Config(format!("shared_dims {shared_dims} must lie in 1..={dim}")));
                }
                Some(random_rotation(seed::derive(seed, "factor-rotation"), dim))
            }
        };
        Ok(Self {
            layout,
            dim,
            n_factors,
            seed,
            rotation,
        })
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    fn noise_seed(&self, factors: &[f32]) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for f in factors {
            h.update(f.to_bits().to_le_bytes());
        }
        u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
    }

    pub fn embed(&self, factors: &[f32]) -> Result<Vec<f32>> {
        if factors.len() != self.n_factors {
            return Err(Error::shape(format!("{} factors", self.n_factors), factors.len()));
        }
        let mut rng = seed::rng(self.noise_seed(factors));
        let mut noise = |sigma: f64| -> f64 {
            let n: f64 = StandardNormal.sample(&mut rng);
            n * sigma
        };
        let mut z = vec![0.0f64; self.dim];
        let used = match &self.layout {
            FactorLayout::Disentangled { block_dims } => {
                let mut pos = 0;
                for (f, &w) in factors.iter().zip(block_dims) {
                    for slot in &mut z[pos..pos + w] {
                        *slot = *f as f64 + noise(FACTOR_NOISE_SIGMA);
                    }
                    pos += w;
                }
                pos
            }
            FactorLayout::Entangled { shared_dims } => {
                let total: f64 = factors.iter().map(|f| *f as f64).sum();
                for slot in &mut z[..*shared_dims] {
                    *slot = total + noise(FACTOR_NOISE_SIGMA);
                }
                *shared_dims
            }
        };
        for slot in &mut z[used..] {
            *slot = noise(FILLER_SIGMA);
        }
        let z: Vec<f32> = z.into_iter().map(|v| v as f32).collect();
        Ok(match &self.rotation {
            Some(q) => q.row_iter().map(|r| Matrix::dot_rows(r, &z) as f32).collect(),
            None => z,
        })
    }
}

impl FeatureExtractor for FactorExtractor {
    fn id(&self) -> String {
        let kind = match self.layout {
            FactorLayout::Disentangled { .. } => "disentangled",
            FactorLayout::Entangled { .. } => "entangled",
        };
        format!("factor-{kind}-d{}-s{}", self.dim, self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn modality(&self) -> Modality {
        Modality::Factors
    }

    fn extract(&self, media: &Media) -> Result<Vec<f32>> {
        match media {
            Media::Factors(f) => self.embed(f),
            other => Err(Error::Config(format!(
                "{} cannot embed {} media",
                self.id(),
                other.modality()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_carry_factors() {
        let ex = FactorExtractor::new(FactorLayout::Disentangled { block_dims: vec![2, 1] }, 2, 6, 1).unwrap();
        let z = ex.embed(&[0.3, 0.8]).unwrap();
        assert!((z[0] - 0.3).abs() < 0.05 && (z[1] - 0.3).abs() < 0.05);
        assert!((z[2] - 0.8).abs() < 0.05);
        assert_eq!(z, ex.embed(&[0.3, 0.8]).unwrap());
        assert_ne!(z, ex.embed(&[0.3, 0.81]).unwrap());
    }

    #[test]
    fn rotation_is_orthonormal() {
        let q = random_rotation(4, 8);
        let qqt = q.matmul_transposed(&q).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qqt.get(i, j) - want).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn invalid_layouts() {
        assert!(FactorExtractor::new(FactorLayout::Disentangled { block_dims: vec![3, 3] }, 2, 4, 0).is_err());
        assert!(FactorExtractor::new(FactorLayout::Disentangled { block_dims: vec![1] }, 2, 4, 0).is_err());
        assert!(FactorExtractor::new(FactorLayout::Entangled { shared_dims: 0 }, 2, 4, 0).is_err());
    }
}
