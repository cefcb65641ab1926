//! Time stretch, pitch shift, additive white noise and synthetic reverb.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use super::dsp::{convolve_truncated, istft, phase_vocoder, resample, stft, HOP, N_FFT};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const STRETCH_RANGE: (f64, f64) = (0.5, 2.0);
pub const PITCH_RANGE: (f64, f64) = (-12.0, 12.0);
pub const SNR_RANGE: (f64, f64) = (-30.0, 50.0);
pub const RT60_RANGE: (f64, f64) = (0.0, 3.0);

/// ln(1000): amplitude decay of 60 dB.
const DECAY_60DB: f64 = 6.907_755_278_982_137;

/// Mono clip with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("audio clip is empty".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be > 0".into()));
        }
        if let Some(v) = samples.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("sample value {v} outside [-1, 1]")));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Clips samples into `[-1, 1]`; non-finite input is rejected.
    pub fn clipped(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite audio sample".into()));
        }
        Self::new(samples.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Reads a WAV file, averaging channels to mono and resampling to
    /// `target_rate` when it differs.
    pub fn read_wav(path: &Path, target_rate: u32) -> Result<Self> {
        let codec = |e: hound::Error| Error::Codec(format!("{}: {e}", path.display()));
        let mut reader = hound::WavReader::open(path).map_err(codec)?;
        let spec = reader.spec();
        let interleaved: Vec<f32> = match spec.sample_format {
            hound::SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>().map_err(codec)?,
            hound::SampleFormat::Int => {
                let scale = (1u64 << (spec.bits_per_sample - 1)) as f32;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f32 / scale))
                    .collect::<Result<_, _>>()
                    .map_err(codec)?
            }
        };
        let channels = spec.channels.max(1) as usize;
        let mono: Vec<f32> = interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f32>() / frame.len() as f32)
            .collect();
        let mono = if spec.sample_rate != target_rate {
            resample(&mono, target_rate as f64 / spec.sample_rate as f64)
        } else {
            mono
        };
        Self::clipped(mono, target_rate)
    }

    /// Writes 16-bit PCM mono.
    pub fn write_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let codec = |e: hound::Error| Error::Codec(format!("{}: {e}", path.display()));
        let mut writer = hound::WavWriter::create(path, spec).map_err(codec)?;
        for s in &self.samples {
            writer.write_sample((s * 32767.0).round() as i16).map_err(codec)?;
        }
        writer.finalize().map_err(codec)
    }
}

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

fn check(what: &'static str, value: f64, (min, max): (f64, f64)) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::Parameter { what, value, min, max })
    }
}

fn stretch_unchecked(samples: &[f32], rate: f64) -> Result<Vec<f32>> {
    if samples.len() < N_FFT {
        return Err(Error::Validation(format!(
            "clip of {} samples is shorter than one {N_FFT}-sample window",
            samples.len()
        )));
    }
    let out_len = (samples.len() as f64 / rate).round() as usize;
    let frames = stft(samples, N_FFT, HOP);
    let stretched = phase_vocoder(&frames, rate, HOP, N_FFT);
    Ok(istft(&stretched, N_FFT, HOP, out_len))
}

/// Phase-vocoder time stretch; `rate` 2.0 halves the duration without
/// changing pitch.
pub fn time_stretch(clip: &AudioClip, rate: f64) -> Result<AudioClip> {
    check("time stretch rate", rate, STRETCH_RANGE)?;
    if rate == 1.0 {
        return Ok(clip.clone());
    }
    AudioClip::clipped(stretch_unchecked(&clip.samples, rate)?, clip.sample_rate)
}

/// Shifts pitch by `semitones`, keeping the original length.
pub fn pitch_shift(clip: &AudioClip, semitones: f64) -> Result<AudioClip> {
    check("pitch shift", semitones, PITCH_RANGE)?;
    if semitones == 0.0 {
        return Ok(clip.clone());
    }
    let factor = 2f64.powf(semitones / 12.0);
    let squeezed = resample(&clip.samples, 1.0 / factor);
    let rate = squeezed.len() as f64 / clip.len() as f64;
    let mut out = stretch_unchecked(&squeezed, rate)?;
    out.resize(clip.len(), 0.0);
    AudioClip::clipped(out, clip.sample_rate)
}

/// Noisy clip together with the scaled noise that was added, before clipping.
#[derive(Debug, Clone)]
pub struct NoisyClip {
    pub clip: AudioClip,
    pub noise: Vec<f32>,
}

/// Adds seeded Gaussian noise so that `20·log10(rms(signal)/rms(noise))`
/// equals `snr_db`, then clips.
pub fn add_white_noise_components(clip: &AudioClip, snr_db: f64, seed: u64) -> Result<NoisyClip> {
    check("noise SNR (dB)", snr_db, SNR_RANGE)?;
    let signal_rms = clip.rms();
    if signal_rms == 0.0 {
        return Err(Error::Degenerate("cannot set an SNR on a silent clip".into()));
    }
    let mut rng = seed::rng(seed);
    let raw: Vec<f64> = (0..clip.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let raw_rms = (raw.iter().map(|v| v * v).sum::<f64>() / raw.len() as f64).sqrt();
    let target = signal_rms / 10f64.powf(snr_db / 20.0);
    let scale = if raw_rms > 0.0 { target / raw_rms } else { 0.0 };
    let noise: Vec<f32> = raw.iter().map(|v| (v * scale) as f32).collect();
    let mixed = clip.samples.iter().zip(&noise).map(|(s, n)| s + n).collect();
    Ok(NoisyClip {
        clip: AudioClip::clipped(mixed, clip.sample_rate)?,
        noise,
    })
}

pub fn add_white_noise(clip: &AudioClip, snr_db: f64, seed: u64) -> Result<AudioClip> {
    add_white_noise_components(clip, snr_db, seed).map(|n| n.clip)
}

/// Unit-energy exponentially decaying noise, 60 dB down at `rt60_s` and
/// truncated at `1.5·rt60_s`. Empty for `rt60_s == 0`.
pub fn synthetic_impulse_response(rt60_s: f64, sample_rate: u32, seed: u64) -> Result<Vec<f32>> {
    check("reverb RT60 (s)", rt60_s, RT60_RANGE)?;
    if rt60_s == 0.0 {
        return Ok(Vec::new());
    }
    let len = ((1.5 * rt60_s * sample_rate as f64).ceil() as usize).max(1);
    let mut rng = seed::rng(seed);
    let ir: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let n: f64 = StandardNormal.sample(&mut rng);
            n * (-DECAY_60DB * t / rt60_s).exp()
        })
        .collect();
    let energy = ir.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ir.iter().map(|v| (v / energy) as f32).collect())
}

/// Convolves with [`synthetic_impulse_response`], keeping the input length.
pub fn room_reverb(clip: &AudioClip, rt60_s: f64, seed: u64) -> Result<AudioClip> {
    let ir = synthetic_impulse_response(rt60_s, clip.sample_rate, seed)?;
    if ir.is_empty() {
        return Ok(clip.clone());
    }
    AudioClip::clipped(convolve_truncated(&clip.samples, &ir), clip.sample_rate)
}

/// Words per second: whitespace-separated tokens over the clip duration.
pub fn speech_rate(transcript: &str, duration_s: f64) -> Result<f64> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::Validation(format!("duration must be > 0, got {duration_s}")));
    }
    Ok(transcript.split_whitespace().count() as f64 / duration_s)
}
