use std::collections::HashSet;
use std::path::Path;

use super::manifest::{load_manifest, write_manifest, SampleRecord, SplitLabel};
use crate::error::{Error, Result};
use crate::extractors::FeatureExtractor;
use crate::numerics::Matrix;
use crate::transforms::audio::{speech_rate, DEFAULT_SAMPLE_RATE};
use crate::transforms::image::mean_hsv;
use crate::transforms::{AudioClip, ImageRgb, Media, Modality};

use super::container::EmbeddingStore;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub record: SampleRecord,
    pub media: Media,
}

/// Manifest records with their decoded media, all of one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    modality: Modality,
}

pub fn engine_tag() -> String {
    format!("repeval {}", env!("CARGO_PKG_VERSION"))
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let modality = samples
            .first()
            .map(|s| s.media.modality())
            .ok_or_else(|| Error::Config("dataset has no samples".into()))?;
        let mut seen = HashSet::new();
        for s in &samples {
            if s.media.modality() != modality {
                return Err(Error::Config(format!(
                    "mixed modalities: sample `{}` is {} in a {modality} dataset",
                    s.record.id,
                    s.media.modality()
                )));
            }
            if !seen.insert(s.record.id.as_str()) {
                return Err(Error::Config(format!("duplicate sample id `{}`", s.record.id)));
            }
        }
        Ok(Self { samples, modality })
    }

    /// Loads a manifest and decodes each media file (`.png`/`.jpg` as images,
    /// `.wav` as audio). Relative paths resolve against the manifest's
    /// directory.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let records = load_manifest(manifest_path)?;
        let samples = records
            .into_iter()
            .map(|record| {
                let path = base.join(&record.media_path);
                let media = load_media(&path)?;
                Ok(Sample { record, media })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    /// Writes media files and a manifest into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut records = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let mut record = s.record.clone();
            record.media_path = save_media(&s.media, dir, &record.id)?.into();
            records.push(record);
        }
        write_manifest(&records, &dir.join("manifest.jsonl"))
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.record.id.clone()).collect()
    }

    pub fn records(&self) -> Vec<SampleRecord> {
        self.samples.iter().map(|s| s.record.clone()).collect()
    }

    pub fn indices_of(&self, split: SplitLabel) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&i| self.samples[i].record.split == split)
            .collect()
    }

    /// Ground-truth value of factor `name` for sample `index`: the manifest
    /// value if present, else computed from the media.
    pub fn fv_value(&self, index: usize, name: &str) -> Result<f64> {
        let s = &self.samples[index];
        if let Some(v) = s.record.fv_values.get(name) {
            return Ok(*v);
        }
        ground_truth(name, &s.record, &s.media).ok_or_else(|| {
            Error::Config(format!(
                "sample `{}` has no value for factor `{name}` and none can be computed",
                s.record.id
            ))
        })?
    }

    pub fn fv_values(&self, name: &str) -> Result<Vec<f64>> {
        (0..self.samples.len()).map(|i| self.fv_value(i, name)).collect()
    }
}

/// Computable factors: mean hue/saturation/brightness of images, speech rate
/// of transcribed audio, and `f<k>` of synthetic factor vectors.
pub fn ground_truth(name: &str, record: &SampleRecord, media: &Media) -> Option<Result<f64>> {
    match (name, media) {
        ("hue", Media::Image(img)) => Some(Ok(mean_hsv(img).hue)),
        ("saturation", Media::Image(img)) => Some(Ok(mean_hsv(img).saturation)),
        ("brightness", Media::Image(img)) => Some(Ok(mean_hsv(img).value)),
        ("speech_rate", Media::Audio(clip)) => {
            let transcript = record.transcript.as_deref()?;
            let duration = record.duration_s.unwrap_or_else(|| clip.duration_s());
            Some(speech_rate(transcript, duration))
        }
        (name, Media::Factors(f)) => {
            let k: usize = name.strip_prefix('f')?.parse().ok()?;
            f.get(k).map(|v| Ok(*v as f64))
        }
        _ => None,
    }
}

pub fn load_media(path: &Path) -> Result<Media> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" | "jpg" | "jpeg" => ImageRgb::read_png(path).map(Media::Image),
        "wav" => AudioClip::read_wav(path, DEFAULT_SAMPLE_RATE).map(Media::Audio),
        _ => Err(Error::Config(format!("unsupported media file {}", path.display()))),
    }
}

/// File-system-safe name derived from a sample id.
pub fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes media under `dir`, returning the file name used.
pub fn save_media(media: &Media, dir: &Path, id: &str) -> Result<String> {
    let stem = file_stem_for(id);
    match media {
        Media::Image(img) => {
            let name = format!("{stem}.png");
            img.write_png(&dir.join(&name))?;
            Ok(name)
        }
        Media::Audio(clip) => {
            let name = format!("{stem}.wav");
            clip.write_wav(&dir.join(&name))?;
            Ok(name)
        }
        Media::Factors(_) => Err(Error::Config("synthetic factor media has no file representation".into())),
    }
}

/// Embeds every sample in dataset order.
pub fn embed_dataset(dataset: &Dataset, extractor: &dyn FeatureExtractor) -> Result<EmbeddingStore> {
    if dataset.modality() != extractor.modality() {
        return Err(Error::Config(format!(
            "extractor {} expects {} media, dataset is {}",
            extractor.id(),
            extractor.modality(),
            dataset.modality()
        )));
    }
    let mut data = Vec::with_capacity(dataset.len() * extractor.dim());
    for s in dataset.samples() {
        let z = extractor.extract(&s.media).map_err(|e| Error::Transform {
            sample: s.record.id.clone(),
            reason: e.to_string(),
        })?;
        data.extend(z);
    }
    let matrix = Matrix::from_vec(dataset.len(), extractor.dim(), data)?;
    EmbeddingStore::new(dataset.ids(), matrix, extractor.id(), engine_tag())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_sample(id: &str, split: SplitLabel) -> Sample {
        Sample {
            record: SampleRecord::new(id, split),
            media: Media::Image(ImageRgb::from_fn(4, 4, |_, _| [0.0, 1.0, 0.0]).unwrap()),
        }
    }

    #[test]
    fn computes_missing_factors() {
        let ds = Dataset::new(vec![image_sample("a", SplitLabel::Train)]).unwrap();
        assert!((ds.fv_value(0, "hue").unwrap() - 1.0 / 3.0).abs() < 1e-6);
        assert!(ds.fv_value(0, "speech_rate").is_err());
    }

    #[test]
    fn manifest_values_take_precedence() {
        let mut s = image_sample("a", SplitLabel::Train);
        s.record.fv_values.insert("hue".into(), 0.9);
        let ds = Dataset::new(vec![s]).unwrap();
        assert_eq!(ds.fv_value(0, "hue").unwrap(), 0.9);
    }

    #[test]
    fn speech_rate_from_transcript() {
        let mut record = SampleRecord::new("c", SplitLabel::Test);
        record.transcript = Some("a b c d".into());
        let clip = AudioClip::new(vec![0.0; 32_000], 16_000).unwrap();
        let v = ground_truth("speech_rate", &record, &Media::Audio(clip)).unwrap().unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn rejects_mixed_and_duplicates() {
        let audio = Sample {
            record: SampleRecord::new("b", SplitLabel::Train),
            media: Media::Audio(AudioClip::new(vec![0.0; 10], 16_000).unwrap()),
        };
        assert!(Dataset::new(vec![image_sample("a", SplitLabel::Train), audio]).is_err());
        assert!(Dataset::new(vec![image_sample("a", SplitLabel::Train), image_sample("a", SplitLabel::Val)]).is_err());
        assert!(Dataset::new(vec![]).is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(vec![
            image_sample("x/1", SplitLabel::Train),
            image_sample("x/2", SplitLabel::Test),
        ])
        .unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(&dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(back.ids(), ds.ids());
        assert_eq!(back.samples()[0].media, ds.samples()[0].media);
        assert_eq!(back.samples()[0].record.media_path, Path::new("x_1.png"));
    }
}
