use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::container::EmbeddingStore;
use super::dataset::{engine_tag, save_media, Dataset};
use super::manifest::{write_manifest, SplitLabel};
use crate::error::{Error, Result};
use crate::extractors::FeatureExtractor;
use crate::numerics::Matrix;
use crate::seed;
use crate::transforms::{Media, TransformKind};

/// A transformation together with its parameter range and sampling seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub fv_target: String,
    pub range: (f64, f64),
    pub neutral: f64,
    pub seed: u64,
}

impl TransformSpec {
    /// Full default range for `kind`.
    pub fn new(kind: TransformKind, seed: u64) -> Self {
        Self {
            kind,
            fv_target: kind.default_fv(),
            range: kind.default_range(),
            neutral: kind.neutral(),
            seed,
        }
    }

    pub fn with_range(mut self, min: f64, max: f64) -> Self {
        self.range = (min, max);
        self
    }

    /// Range collapsed onto the neutral parameter.
    pub fn collapsed(mut self) -> Self {
        self.range = (self.neutral, self.neutral);
        self
    }

    pub fn min(&self) -> f64 {
        self.range.0
    }

    pub fn max(&self) -> f64 {
        self.range.1
    }

    /// A collapsed range (`min == max`) is allowed and normalizes to 0.
    pub fn validate(&self) -> Result<()> {
        let (min, max) = self.range;
        let fail = |msg: String| Err(Error::Config(format!("transform {}: {msg}", self.kind)));
        if !min.is_finite() || !max.is_finite() || min > max {
            return fail(format!("invalid range [{min}, {max}]"));
        }
        if !matches!(self.kind, TransformKind::FactorShift(_)) {
            let (lo, hi) = self.kind.default_range();
            if min < lo || max > hi {
                return fail(format!("range [{min}, {max}] exceeds the valid domain [{lo}, {hi}]"));
            }
        }
        if self.kind.has_identity() && !(min..=max).contains(&self.neutral) {
            return fail(format!("neutral {} lies outside [{min}, {max}]", self.neutral));
        }
        Ok(())
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        let (min, max) = self.range;
        if max > min {
            (raw - min) / (max - min)
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, normalized: f64) -> f64 {
        self.range.0 + normalized * (self.range.1 - self.range.0)
    }

    /// Uniform draw in the range from a per-sample seed.
    pub fn sample_param(&self, sample_id: &str) -> f64 {
        let (min, max) = self.range;
        if max > min {
            seed::rng(seed::derive(self.seed, sample_id)).gen_range(min..=max)
        } else {
            min
        }
    }

    /// Seed for the stochastic part of the transform itself (noise, IR).
    pub fn transform_seed(&self, sample_id: &str) -> u64 {
        seed::derive2(self.seed, sample_id, "transform")
    }

    pub fn apply(&self, media: &Media, param: f64, sample_id: &str) -> Result<Media> {
        self.kind.apply(media, param, self.transform_seed(sample_id))
    }
}

/// Clean and transformed embeddings aligned by id, with the parameter that
/// produced each transformed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedEmbeddingSet {
    pub ids: Vec<String>,
    pub splits: Vec<SplitLabel>,
    pub z_clean: EmbeddingStore,
    pub z_transformed: EmbeddingStore,
    pub params_raw: Vec<f64>,
    pub params_normalized: Vec<f64>,
    /// Samples dropped during materialization, with the reason.
    pub failures: Vec<(String, String)>,
}

impl PairedEmbeddingSet {
    pub fn new(
        ids: Vec<String>,
        splits: Vec<SplitLabel>,
        z_clean: EmbeddingStore,
        z_transformed: EmbeddingStore,
        params_raw: Vec<f64>,
        params_normalized: Vec<f64>,
    ) -> Result<Self> {
        let n = ids.len();
        if [
            splits.len(),
            z_clean.len(),
            z_transformed.len(),
            params_raw.len(),
            params_normalized.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::Alignment("pair components have different lengths".into()));
        }
        if z_clean.ids != ids || z_transformed.ids != ids {
            return Err(Error::Alignment("store ids do not follow the pair order".into()));
        }
        if z_clean.dim() != z_transformed.dim() {
            return Err(Error::shape(z_clean.dim(), z_transformed.dim()));
        }
        if let Some(p) = params_normalized.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Validation(format!("normalized parameter {p} outside [0, 1]")));
        }
        Ok(Self {
            ids,
            splits,
            z_clean,
            z_transformed,
            params_raw,
            params_normalized,
            failures: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.z_clean.dim()
    }

    pub fn indices_of(&self, split: SplitLabel) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }
}

pub(crate) fn check_modalities(dataset: &Dataset, spec: &TransformSpec, extractor: &dyn FeatureExtractor) -> Result<()> {
    spec.validate()?;
    let m = dataset.modality();
    if spec.kind.modality() != m || extractor.modality() != m {
        return Err(Error::Config(format!(
            "transform {} ({}) and extractor {} ({}) must both match the {m} dataset",
            spec.kind,
            spec.kind.modality(),
            extractor.id(),
            extractor.modality()
        )));
    }
    Ok(())
}

/// Largest tolerated fraction of failing samples.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Fails when more than [`MAX_FAILURE_FRACTION`] of `total` samples failed.
pub(crate) fn check_failures(failures: &[(String, String)], total: usize) -> Result<()> {
    if failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        let (id, reason) = &failures[0];
        return Err(Error::Transform {
            sample: id.clone(),
            reason: format!("{reason} ({} of {total} samples failed)", failures.len()),
        });
    }
    Ok(())
}

/// Draws one parameter per sample, transforms it, and embeds both versions.
pub fn materialize_pairs(
    dataset: &Dataset,
    spec: &TransformSpec,
    extractor: &dyn FeatureExtractor,
) -> Result<PairedEmbeddingSet> {
    check_modalities(dataset, spec, extractor)?;
    let dim = extractor.dim();
    let mut ids = Vec::new();
    let mut splits = Vec::new();
    let mut clean = Vec::new();
    let mut transformed = Vec::new();
    let mut raw = Vec::new();
    let mut failures = Vec::new();

    for s in dataset.samples() {
        let id = &s.record.id;
        let p = spec.sample_param(id);
        let result = spec
            .apply(&s.media, p, id)
            .and_then(|t| Ok((extractor.extract(&s.media)?, extractor.extract(&t)?)));
        match result {
            Ok((z, zt)) => {
                ids.push(id.clone());
                splits.push(s.record.split);
                clean.extend(z);
                transformed.extend(zt);
                raw.push(p);
            }
            Err(e) => failures.push((id.clone(), e.to_string())),
        }
    }
    check_failures(&failures, dataset.len())?;

    let n = ids.len();
    let tag = engine_tag();
    let created = format!("{tag}; transform {}", spec.kind);
    let z_clean = EmbeddingStore::new(ids.clone(), Matrix::from_vec(n, dim, clean)?, extractor.id(), &tag)?;
    let z_transformed = EmbeddingStore::new(ids.clone(), Matrix::from_vec(n, dim, transformed)?, extractor.id(), created)?;
    let normalized = raw.iter().map(|p| spec.normalize(*p)).collect();
    let mut pairs = PairedEmbeddingSet::new(ids, splits, z_clean, z_transformed, raw, normalized)?;
    pairs.failures = failures;
    Ok(pairs)
}

/// One line of a parameter log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamLogEntry {
    pub id: String,
    pub raw: f64,
    pub normalized: f64,
}

pub fn write_param_log(pairs: &PairedEmbeddingSet, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for i in 0..pairs.len() {
        let entry = ParamLogEntry {
            id: pairs.ids[i].clone(),
            raw: pairs.params_raw[i],
            normalized: pairs.params_normalized[i],
        };
        serde_json::to_writer(&mut out, &entry).expect("entry serializes");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_param_log(path: &Path) -> Result<Vec<ParamLogEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Writes the transformed media for every sample into `dir`, with a manifest
/// and a parameter log, so external tools can embed exactly the same inputs.
pub fn export_transformed_media(dataset: &Dataset, spec: &TransformSpec, dir: &Path) -> Result<()> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(dataset.len());
    let mut log = Vec::new();
    for s in dataset.samples() {
        let id = &s.record.id;
        let p = spec.sample_param(id);
        let media = spec.apply(&s.media, p, id).map_err(|e| Error::Transform {
            sample: id.clone(),
            reason: e.to_string(),
        })?;
        let mut record = s.record.clone();
        record.media_path = save_media(&media, dir, id)?.into();
        records.push(record);
        let entry = ParamLogEntry {
            id: id.clone(),
            raw: p,
            normalized: spec.normalize(p),
        };
        serde_json::to_writer(&mut log, &entry).expect("entry serializes");
        log.push(b'\n');
    }
    write_manifest(&records, &dir.join("manifest.jsonl"))?;
    let path = dir.join("params.jsonl");
    fs::write(&path, log).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_inverts() {
        let spec = TransformSpec::new(TransformKind::PitchShift, 3);
        for raw in [-12.0, -3.5, 0.0, 7.25, 12.0] {
            let n = spec.normalize(raw);
            assert!((0.0..=1.0).contains(&n));
            assert!((spec.denormalize(n) - raw).abs() < 1e-9);
        }
    }

    #[test]
    fn per_id_draws_are_stable_and_in_range() {
        let spec = TransformSpec::new(TransformKind::TimeStretch, 11);
        let a = spec.sample_param("clip-7");
        assert_eq!(a, spec.sample_param("clip-7"));
        assert!((0.5..=2.0).contains(&a));
        assert_ne!(a, spec.sample_param("clip-8"));
        assert_eq!(spec.clone().collapsed().sample_param("clip-7"), 1.0);
    }

    #[test]
    fn validation_rules() {
        assert!(TransformSpec::new(TransformKind::HueShift, 0).validate().is_ok());
        assert!(TransformSpec::new(TransformKind::HueShift, 0)
            .with_range(0.2, 0.1)
            .validate()
            .is_err());
        assert!(TransformSpec::new(TransformKind::HueShift, 0)
            .with_range(-1.0, 0.1)
            .validate()
            .is_err());
        assert!(TransformSpec::new(TransformKind::HueShift, 0)
            .with_range(0.1, 0.3)
            .validate()
            .is_err());
        assert!(TransformSpec::new(TransformKind::JpegCompression, 0)
            .with_range(10.0, 50.0)
            .validate()
            .is_ok());
        assert!(TransformSpec::new(TransformKind::RoomReverb, 0)
            .collapsed()
            .validate()
            .is_ok());
    }

    #[test]
    fn failure_budget() {
        let one = vec![("a".to_string(), "boom".to_string())];
        assert!(check_failures(&one, 100).is_ok());
        assert!(check_failures(&one, 99).is_err());
        assert!(check_failures(&[], 0).is_ok());
    }
}
