//! Parametric data-space transformations.

pub mod audio;
pub mod dsp;
pub mod image;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::audio::AudioClip;
pub use self::image::ImageRgb;
use crate::error::{Error, Result};

/// A data sample in one of the supported modalities.
///
/// `Factors` is a bare vector of generative factors, used by the synthetic
/// fixtures where the "extractor" writes factors straight into latent space.
#[derive(Debug, Clone, PartialEq)]
pub enum Media {
    Image(ImageRgb),
    Audio(AudioClip),
    Factors(Vec<f32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Audio,
    Factors,
}

impl Media {
    pub fn modality(&self) -> Modality {
        match self {
            Media::Image(_) => Modality::Image,
            Media::Audio(_) => Modality::Audio,
            Media::Factors(_) => Modality::Factors,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Image => "image",
            Modality::Audio => "audio",
            Modality::Factors => "factors",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    HueShift,
    SaturationShift,
    BrightnessShift,
    JpegCompression,
    TimeStretch,
    PitchShift,
    AdditiveWhiteNoise,
    RoomReverb,
    /// Additive shift of one synthetic factor, by index, clamped to the
    /// factor domain `[0, 1]`.
    FactorShift(usize),
}

impl TransformKind {
    pub const ALL_MEDIA: [TransformKind; 8] = [
        TransformKind::HueShift,
        TransformKind::SaturationShift,
        TransformKind::BrightnessShift,
        TransformKind::JpegCompression,
        TransformKind::TimeStretch,
        TransformKind::PitchShift,
        TransformKind::AdditiveWhiteNoise,
        TransformKind::RoomReverb,
    ];

    pub fn modality(self) -> Modality {
        use TransformKind::*;
        match self {
            HueShift | SaturationShift | BrightnessShift | JpegCompression => Modality::Image,
            TimeStretch | PitchShift | AdditiveWhiteNoise | RoomReverb => Modality::Audio,
            FactorShift(_) => Modality::Factors,
        }
    }

    /// Full parameter range.
    pub fn default_range(self) -> (f64, f64) {
        use TransformKind::*;
        match self {
            HueShift => image::HUE_RANGE,
            SaturationShift | BrightnessShift => image::SHIFT_RANGE,
            JpegCompression => image::JPEG_RANGE,
            TimeStretch => audio::STRETCH_RANGE,
            PitchShift => audio::PITCH_RANGE,
            AdditiveWhiteNoise => audio::SNR_RANGE,
            RoomReverb => audio::RT60_RANGE,
            FactorShift(_) => (-1.0, 1.0),
        }
    }

    /// The identity parameter. JPEG and noise have none in range and use
    /// their least destructive endpoint.
    pub fn neutral(self) -> f64 {
        use TransformKind::*;
        match self {
            TimeStretch => 1.0,
            JpegCompression => image::JPEG_RANGE.1,
            AdditiveWhiteNoise => audio::SNR_RANGE.1,
            _ => 0.0,
        }
    }

    /// Whether [`neutral`](Self::neutral) maps every input to itself.
    pub fn has_identity(self) -> bool {
        !matches!(self, TransformKind::JpegCompression | TransformKind::AdditiveWhiteNoise)
    }

    /// Name of the factor of variation this transform manipulates.
    pub fn default_fv(self) -> String {
        use TransformKind::*;
        match self {
            HueShift => "hue".into(),
            SaturationShift => "saturation".into(),
            BrightnessShift => "brightness".into(),
            JpegCompression => "jpeg_quality".into(),
            TimeStretch => "speech_rate".into(),
            PitchShift => "pitch".into(),
            AdditiveWhiteNoise => "white_noise".into(),
            RoomReverb => "reverb".into(),
            FactorShift(i) => format!("f{i}"),
        }
    }

    pub fn name(self) -> String {
        use TransformKind::*;
        match self {
            HueShift => "hue_shift".into(),
            SaturationShift => "saturation_shift".into(),
            BrightnessShift => "brightness_shift".into(),
            JpegCompression => "jpeg_compression".into(),
            TimeStretch => "time_stretch".into(),
            PitchShift => "pitch_shift".into(),
            AdditiveWhiteNoise => "additive_white_noise".into(),
            RoomReverb => "room_reverb".into(),
            FactorShift(i) => format!("factor_shift_{i}"),
        }
    }

    /// Applies the transform. `seed` drives the stochastic transforms (noise,
    /// reverb) and is ignored by the rest.
    pub fn apply(self, media: &Media, param: f64, seed: u64) -> Result<Media> {
        use TransformKind::*;
        match (self, media) {
            (HueShift, Media::Image(img)) => image::hue_shift(img, param).map(Media::Image),
            (SaturationShift, Media::Image(img)) => image::saturation_shift(img, param).map(Media::Image),
            (BrightnessShift, Media::Image(img)) => image::brightness_shift(img, param).map(Media::Image),
            (JpegCompression, Media::Image(img)) => image::jpeg_compress(img, param).map(Media::Image),
            (TimeStretch, Media::Audio(c)) => audio::time_stretch(c, param).map(Media::Audio),
            (PitchShift, Media::Audio(c)) => audio::pitch_shift(c, param).map(Media::Audio),
            (AdditiveWhiteNoise, Media::Audio(c)) => audio::add_white_noise(c, param, seed).map(Media::Audio),
            (RoomReverb, Media::Audio(c)) => audio::room_reverb(c, param, seed).map(Media::Audio),
            (FactorShift(i), Media::Factors(f)) => {
                if i >= f.len() {
                    return Err(Error::Config(format!(
                        "factor index {i} out of range for {} factors",
                        f.len()
                    )));
                }
                if !param.is_finite() {
                    return Err(Error::Parameter {
                        what: "factor shift",
                        value: param,
                        min: f64::MIN,
                        max: f64::MAX,
                    });
                }
                let mut out = f.clone();
                out[i] = (out[i] + param as f32).clamp(0.0, 1.0);
                Ok(Media::Factors(out))
            }
            (kind, media) => Err(Error::Config(format!(
                "{} applies to {} media, got {}",
                kind.name(),
                kind.modality(),
                media.modality()
            ))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
