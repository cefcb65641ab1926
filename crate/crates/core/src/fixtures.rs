//! Deterministic synthetic datasets, stores and test signals.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{embed_dataset, engine_tag, Dataset, EmbeddingStore, PairedEmbeddingSet, Sample, SampleRecord, SplitLabel};
use crate::error::{Error, Result};
use crate::extractors::{FactorExtractor, FactorLayout};
use crate::numerics::{l2_normalize, Matrix};
use crate::seed;
use crate::transforms::image::pixel_hsv_to_rgb;
use crate::transforms::{AudioClip, ImageRgb, Media};

/// Everything needed to regenerate a fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixtureSpec {
    DisentangledStore {
        n: usize,
        d: usize,
        fv_dims: Vec<usize>,
        seed: u64,
    },
    EntangledStore {
        n: usize,
        d: usize,
        n_factors: usize,
        shared_dims: usize,
        seed: u64,
    },
    LinearActionPairs {
        n: usize,
        d: usize,
        seed: u64,
    },
    SineClip {
        freq_hz: f64,
        dur_s: f64,
        sample_rate: u32,
    },
    GradientImage {
        height: usize,
        width: usize,
    },
    SpeckleImage {
        height: usize,
        width: usize,
        seed: u64,
    },
}

/// Split by position: the first 70% train, the next 15% val, the rest test.
pub fn split_for(index: usize, n: usize) -> SplitLabel {
    let train = n * 70 / 100;
    let val = n * 85 / 100;
    if index < train {
        SplitLabel::Train
    } else if index < val {
        SplitLabel::Val
    } else {
        SplitLabel::Test
    }
}

/// A factor dataset together with the extractor that embeds it.
#[derive(Debug, Clone)]
pub struct FactorFixture {
    pub dataset: Dataset,
    pub extractor: FactorExtractor,
    pub store: EmbeddingStore,
    /// Factor names `f0, f1, ...`, matching [`TransformKind::FactorShift`](crate::transforms::TransformKind::FactorShift).
    pub fv_names: Vec<String>,
}

impl FactorFixture {
    /// Column of factor `k` in dataset order.
    pub fn fv_column(&self, k: usize) -> Vec<f64> {
        self.dataset
            .samples()
            .iter()
            .map(|s| match &s.media {
                Media::Factors(f) => f[k] as f64,
                _ => unreachable!("factor fixture holds factor media"),
            })
            .collect()
    }
}

/// Factor vectors with components uniform in `[0, 1]`.
pub fn synthetic_factor_dataset(n: usize, n_factors: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seed::rng(seed::derive(seed, "factors"));
    let samples = (0..n)
        .map(|i| Sample {
            record: SampleRecord::new(format!("s{i:05}"), split_for(i, n)),
            media: Media::Factors((0..n_factors).map(|_| rng.gen::<f32>()).collect()),
        })
        .collect();
    Dataset::new(samples)
}

fn factor_fixture(n: usize, n_factors: usize, extractor: FactorExtractor, seed: u64) -> Result<FactorFixture> {
    let dataset = synthetic_factor_dataset(n, n_factors, seed)?;
    let store = embed_dataset(&dataset, &extractor)?;
    Ok(FactorFixture {
        dataset,
        extractor,
        store,
        fv_names: (0..n_factors).map(|k| format!("f{k}")).collect(),
    })
}

/// Factors uniform in `[0, 1]`, each copied into its own block of
/// `fv_dims[k]` dimensions.
pub fn gen_disentangled_store(n: usize, d: usize, fv_dims: &[usize], seed: u64) -> Result<FactorFixture> {
    let layout = FactorLayout::Disentangled {
        block_dims: fv_dims.to_vec(),
    };
    let extractor = FactorExtractor::new(layout, fv_dims.len(), d, seed)?;
    factor_fixture(n, fv_dims.len(), extractor, seed)
}

/// Factors summed into `shared_dims` common dimensions, then rotated.
pub fn gen_entangled_store(n: usize, d: usize, n_factors: usize, shared_dims: usize, seed: u64) -> Result<FactorFixture> {
    let extractor = FactorExtractor::new(FactorLayout::Entangled { shared_dims }, n_factors, d, seed)?;
    factor_fixture(n, n_factors, extractor, seed)
}

fn unit_gaussian(rng: &mut impl Rng, d: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..d)
            .map(|_| {
                let x: f64 = StandardNormal.sample(rng);
                x as f32
            })
            .collect();
        if let Ok(u) = l2_normalize(&v) {
            return u;
        }
    }
}

/// Unit vectors `z`, and `z' = normalize(z + p·u)` for one seeded unit
/// direction `u` and `p ~ U[0, 1]`.
pub fn gen_linear_action_pairs(n: usize, d: usize, seed: u64) -> Result<PairedEmbeddingSet> {
    if n < 2 || d < 2 {
        return Err(Error::Config(format!("linear action pairs need n, d >= 2 (got {n}, {d})")));
    }
    let u = unit_gaussian(&mut seed::rng(seed::derive(seed, "direction")), d);
    let mut rng = seed::rng(seed::derive(seed, "pairs"));
    let mut clean = Vec::with_capacity(n * d);
    let mut moved = Vec::with_capacity(n * d);
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let z = unit_gaussian(&mut rng, d);
        let p: f64 = rng.gen();
        let shifted: Vec<f32> = z.iter().zip(&u).map(|(a, b)| a + p as f32 * b).collect();
        let zt = if p == 0.0 { z.clone() } else { l2_normalize(&shifted)? };
        clean.extend_from_slice(&z);
        moved.extend(zt);
        params.push(p);
    }
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:05}")).collect();
    let splits = (0..n).map(|i| split_for(i, n)).collect();
    let id = format!("linear-action-d{d}-s{seed}");
    let z_clean = EmbeddingStore::new(ids.clone(), Matrix::from_vec(n, d, clean)?, &id, engine_tag())?;
    let z_transformed = EmbeddingStore::new(ids.clone(), Matrix::from_vec(n, d, moved)?, &id, engine_tag())?;
    PairedEmbeddingSet::new(ids, splits, z_clean, z_transformed, params.clone(), params)
}

/// Permutes the parameters against the pairs, destroying any relation.
pub fn shuffle_params(pairs: &PairedEmbeddingSet, seed: u64) -> Result<PairedEmbeddingSet> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    PairedEmbeddingSet::new(
        pairs.ids.clone(),
        pairs.splits.clone(),
        pairs.z_clean.clone(),
        pairs.z_transformed.clone(),
        order.iter().map(|&i| pairs.params_raw[i]).collect(),
        order.iter().map(|&i| pairs.params_normalized[i]).collect(),
    )
}

/// Permutes the transformed embeddings against the clean ones.
pub fn shuffle_transformed(pairs: &PairedEmbeddingSet, seed: u64) -> Result<PairedEmbeddingSet> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    let z = &pairs.z_transformed;
    let shuffled = EmbeddingStore::new(
        pairs.ids.clone(),
        z.matrix.select_rows(&order),
        z.extractor_id.clone(),
        z.created_by.clone(),
    )?;
    PairedEmbeddingSet::new(
        pairs.ids.clone(),
        pairs.splits.clone(),
        pairs.z_clean.clone(),
        shuffled,
        pairs.params_raw.clone(),
        pairs.params_normalized.clone(),
    )
}

/// `0.5·sin(2πft)`.
pub fn gen_sine_clip(freq_hz: f64, dur_s: f64, sample_rate: u32) -> Result<AudioClip> {
    if !(freq_hz > 0.0 && dur_s > 0.0 && sample_rate > 0) {
        return Err(Error::Config(format!(
            "sine clip needs positive parameters (f {freq_hz}, dur {dur_s}, sr {sample_rate})"
        )));
    }
    let n = (dur_s * sample_rate as f64).round() as usize;
    let samples = (0..n)
        .map(|i| (0.5 * (2.0 * PI * freq_hz * i as f64 / sample_rate as f64).sin()) as f32)
        .collect();
    AudioClip::new(samples, sample_rate)
}

/// Horizontal ramp `t = x/(w-1)` in red, split between green and blue along
/// the vertical so that `max(r, g, b) = t` and the mean value is 0.5.
pub fn gen_gradient_image(height: usize, width: usize) -> Result<ImageRgb> {
    if height < 2 || width < 2 {
        return Err(Error::Config(format!(
            "gradient image needs at least 2x2 (got {height}x{width})"
        )));
    }
    ImageRgb::from_fn(height, width, |y, x| {
        let t = x as f32 / (width - 1) as f32;
        let v = y as f32 / (height - 1) as f32;
        [t, t * v, t * (1.0 - v) * 0.5]
    })
}

/// Independent uniform pixels.
pub fn speckle_image(height: usize, width: usize, seed: u64) -> Result<ImageRgb> {
    let mut rng = seed::rng(seed);
    ImageRgb::from_fn(height, width, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// Smooth colour fields with a random base hue, saturation and value per
/// image, plus a gentle spatial ramp so every image has some texture.
pub fn synthetic_image_dataset(n: usize, size: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seed::rng(seed::derive(seed, "images"));
    let samples = (0..n)
        .map(|i| {
            let hue: f32 = rng.gen_range(0.05..0.45);
            let sat: f32 = rng.gen_range(0.3..0.9);
            let val: f32 = rng.gen_range(0.3..0.9);
            let angle: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
            let (ca, sa) = (angle.cos(), angle.sin());
            let img = ImageRgb::from_fn(size, size, |y, x| {
                let u = (x as f32 / size as f32 - 0.5) * ca + (y as f32 / size as f32 - 0.5) * sa;
                let h = hue + 0.05 * u;
                let s = (sat + 0.1 * u).clamp(0.0, 1.0);
                let v = (val - 0.1 * u).clamp(0.0, 1.0);
                pixel_hsv_to_rgb([h, s, v])
            })?;
            Ok(Sample {
                record: SampleRecord::new(format!("img{i:04}"), split_for(i, n)),
                media: Media::Image(img),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Voiced "syllables": harmonic tones with a random pitch, gated by a
/// raised-cosine envelope at a random syllable rate. Each syllable counts as
/// one word of the transcript, so speech rate is known exactly.
pub fn synthetic_audio_dataset(n: usize, dur_s: f64, sample_rate: u32, seed: u64) -> Result<Dataset> {
    let mut rng = seed::rng(seed::derive(seed, "clips"));
    let len = (dur_s * sample_rate as f64).round() as usize;
    let samples = (0..n)
        .map(|i| {
            let f0: f64 = rng.gen_range(110.0..260.0);
            let syllables = rng.gen_range(2..=6usize);
            let syl_len = len as f64 / syllables as f64;
            let data: Vec<f32> = (0..len)
                .map(|t| {
                    let ts = t as f64 / sample_rate as f64;
                    let phase = (t as f64 % syl_len) / syl_len;
                    let env = 0.5 - 0.5 * (2.0 * PI * phase).cos();
                    let tone: f64 = (1..=4).map(|h| (2.0 * PI * f0 * h as f64 * ts).sin() / h as f64).sum();
                    (0.3 * env * tone / 2.1) as f32
                })
                .collect();
            let mut record = SampleRecord::new(format!("clip{i:04}"), split_for(i, n));
            record.transcript = Some(vec!["la"; syllables].join(" "));
            record.duration_s = Some(dur_s);
            Ok(Sample {
                record,
                media: Media::Audio(AudioClip::new(data, sample_rate)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

impl FixtureSpec {
    /// Builds media fixtures; store and pair fixtures have their own
    /// generators because they return richer types.
    pub fn media(&self) -> Result<Media> {
        match *self {
            FixtureSpec::SineClip {
                freq_hz,
                dur_s,
                sample_rate,
            } => gen_sine_clip(freq_hz, dur_s, sample_rate).map(Media::Audio),
            FixtureSpec::GradientImage { height, width } => gen_gradient_image(height, width).map(Media::Image),
            FixtureSpec::SpeckleImage { height, width, seed } => speckle_image(height, width, seed).map(Media::Image),
            _ => Err(Error::Config("fixture is not a media fixture".into())),
        }
    }

    pub fn factor_fixture(&self) -> Result<FactorFixture> {
        match self {
            FixtureSpec::DisentangledStore { n, d, fv_dims, seed } => gen_disentangled_store(*n, *d, fv_dims, *seed),
            FixtureSpec::EntangledStore {
                n,
                d,
                n_factors,
                shared_dims,
                seed,
            } => gen_entangled_store(*n, *d, *n_factors, *shared_dims, *seed),
            _ => Err(Error::Config("fixture is not a store fixture".into())),
        }
    }

    pub fn pairs(&self) -> Result<PairedEmbeddingSet> {
        match *self {
            FixtureSpec::LinearActionPairs { n, d, seed } => gen_linear_action_pairs(n, d, seed),
            _ => Err(Error::Config("fixture is not a pair fixture".into())),
        }
    }
}
