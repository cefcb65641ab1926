use super::{project, random_projection, FeatureExtractor};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::seed;
use crate::transforms::dsp::stft;
use crate::transforms::{AudioClip, Media, Modality};

const N_FFT: usize = 1024;
const HOP: usize = 256;
const N_MELS: usize = 64;
const MIN_DURATION_S: f64 = 0.5;

/// 64-band log-mel spectrogram pooled to per-band mean and standard
/// deviation, then a fixed seeded random projection.
#[derive(Debug, Clone)]
pub struct ToyAudioExtractor {
    seed: u64,
    weights: Matrix,
    bias: Vec<f32>,
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced on the mel scale from 0 Hz to Nyquist.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let bins = n_fft / 2 + 1;
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = |k: usize| k as f64 * sample_rate as f64 / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = bin_hz(k);
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-band mean followed by per-band standard deviation of the log-mel
/// spectrogram (128 values).
pub fn pooled_log_mel(clip: &AudioClip) -> Vec<f32> {
    let frames = stft(clip.samples(), N_FFT, HOP);
    let bank = mel_filterbank(N_MELS, N_FFT, clip.sample_rate());
    let mut sum = vec![0.0f64; N_MELS];
    let mut sq = vec![0.0f64; N_MELS];
    for frame in &frames {
        let power: Vec<f64> = frame.iter().map(|c| c.norm_sqr()).collect();
        for (m, filt) in bank.iter().enumerate() {
            let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
            let l = (e + 1e-6).ln();
            sum[m] += l;
            sq[m] += l * l;
        }
    }
    let n = frames.len() as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stds = sq.iter().zip(&means).map(|(q, m)| (q / n - m * m).max(0.0).sqrt());
    means.iter().copied().chain(stds).map(|v| v as f32).collect()
}

impl ToyAudioExtractor {
    pub fn new(seed: u64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("toy extractor dim must be >= 2, got {dim}")));
        }
        Ok(Self {
            seed,
            weights: random_projection(seed::derive(seed, "toy-audio"), dim, 2 * N_MELS),
            bias: vec![0.0; dim],
        })
    }

    pub fn embed(&self, clip: &AudioClip) -> Result<Vec<f32>> {
        if clip.duration_s() < MIN_DURATION_S {
            return Err(Error::Validation(format!(
                "clip of {:.3} s is shorter than {MIN_DURATION_S} s",
                clip.duration_s()
            )));
        }
        Ok(project(&self.weights, &self.bias, &pooled_log_mel(clip)))
    }
}

impl FeatureExtractor for ToyAudioExtractor {
    fn id(&self) -> String {
        format!("toy-audio-d{}-s{}", self.bias.len(), self.seed)
    }

    fn dim(&self) -> usize {
        self.bias.len()
    }

    fn modality(&self) -> Modality {
        Modality::Audio
    }

    fn extract(&self, media: &Media) -> Result<Vec<f32>> {
        match media {
            Media::Audio(clip) => self.embed(clip),
            other => Err(Error::Config(format!(
                "{} cannot embed {} media",
                self.id(),
                other.modality()
            ))),
        }
    }
}
