use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::axes::{Axis, ProbeKind, DEFAULT_GRID_POINTS};
use crate::data::TransformSpec;
use crate::error::{Error, Result};
use crate::extractors::{FactorLayout, ToyExtractorConfig};
use crate::numerics::AdamConfig;
use crate::transforms::{Modality, TransformKind};

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A manifest file; media paths resolve against its directory.
    Manifest {
        path: PathBuf,
    },
    SyntheticImages {
        n: usize,
        size: usize,
        seed: u64,
    },
    SyntheticAudio {
        n: usize,
        duration_s: f64,
        sample_rate: u32,
        seed: u64,
    },
    SyntheticFactors {
        n: usize,
        n_factors: usize,
        seed: u64,
    },
}

impl DatasetSource {
    /// Known without loading anything, except for manifests.
    pub fn modality(&self) -> Option<Modality> {
        match self {
            DatasetSource::Manifest { .. } => None,
            DatasetSource::SyntheticImages { .. } => Some(Modality::Image),
            DatasetSource::SyntheticAudio { .. } => Some(Modality::Audio),
            DatasetSource::SyntheticFactors { .. } => Some(Modality::Factors),
        }
    }
}

/// Precomputed embeddings of one transform's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalPair {
    pub transformed: PathBuf,
    pub params: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtractorConfig {
    Toy(ToyExtractorConfig),
    Factor {
        layout: FactorLayout,
        n_factors: usize,
        dim: usize,
        seed: u64,
    },
    /// Containers written by another tool; only probe-based axes on stored
    /// pairs are available.
    External {
        clean: PathBuf,
        #[serde(default)]
        pairs: BTreeMap<String, ExternalPair>,
    },
}

impl ExtractorConfig {
    pub fn modality(&self) -> Option<Modality> {
        match self {
            ExtractorConfig::Toy(t) => Some(t.modality),
            ExtractorConfig::Factor { .. } => Some(Modality::Factors),
            ExtractorConfig::External { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub kind: TransformKind,
    /// Defaults to the full range of the transform.
    #[serde(default)]
    pub range: Option<(f64, f64)>,
    #[serde(default)]
    pub fv_target: Option<String>,
    pub seed: u64,
}

impl TransformConfig {
    pub fn to_spec(&self) -> TransformSpec {
        let mut spec = TransformSpec::new(self.kind, self.seed);
        if let Some((lo, hi)) = self.range {
            spec = spec.with_range(lo, hi);
        }
        if let Some(fv) = &self.fv_target {
            spec.fv_target = fv.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub axis: Axis,
    pub dataset: String,
    pub extractor: String,
    #[serde(default)]
    pub fv: Option<String>,
    #[serde(default)]
    pub transform: Option<String>,
    #[serde(default)]
    pub probe: ProbeKind,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    /// Also write the transformed media, a manifest and the parameter log,
    /// for external extractors to embed.
    #[serde(default)]
    pub export_media: bool,
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

/// One JSON document describing a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed for probe initialization and shuffling.
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub training: AdamConfig,
    pub datasets: BTreeMap<String, DatasetSource>,
    pub extractors: BTreeMap<String, ExtractorConfig>,
    #[serde(default)]
    pub transforms: BTreeMap<String, TransformConfig>,
    pub jobs: Vec<JobConfig>,
}

/// A bundled configuration: 32 synthetic images and 16 synthetic clips, toy
/// extractors, all five axes on each.
pub const SMOKE_CONFIG: &str = include_str!("../../configs/smoke.json");

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(out) = &mut self.output_dir {
            fix(out);
        }
        for source in self.datasets.values_mut() {
            if let DatasetSource::Manifest { path } = source {
                fix(path);
            }
        }
        for ex in self.extractors.values_mut() {
            if let ExtractorConfig::External { clean, pairs } = ex {
                fix(clean);
                for p in pairs.values_mut() {
                    fix(&mut p.transformed);
                    fix(&mut p.params);
                }
            }
        }
    }

    /// SHA-256 over the canonical JSON form. Maps are ordered, so equal
    /// configurations hash equally.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.output_dir = None;
        hex(&serde_json::to_vec(&cfg).expect("config serializes"))
    }

    /// Every reference resolves, every job has what its axis needs, and
    /// modalities agree where they are known.
    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if self.jobs.is_empty() {
            return Err(Error::Config("config declares no jobs".into()));
        }
        for (name, t) in &self.transforms {
            t.to_spec()
                .validate()
                .map_err(|e| Error::Config(format!("transform `{name}`: {e}")))?;
        }
        for (name, ex) in &self.extractors {
            if let ExtractorConfig::External { pairs, .. } = ex {
                if let Some(t) = pairs.keys().find(|t| !self.transforms.contains_key(*t)) {
                    return Err(Error::Config(format!(
                        "extractor `{name}` lists pairs for unknown transform `{t}`"
                    )));
                }
            }
        }
        for (i, job) in self.jobs.iter().enumerate() {
            self.validate_job(job)
                .map_err(|e| Error::Config(format!("job {i} ({}): {e}", job.axis)))?;
        }
        Ok(())
    }

    fn validate_job(&self, job: &JobConfig) -> Result<()> {
        let dataset = self
            .datasets
            .get(&job.dataset)
            .ok_or_else(|| Error::Config(format!("unknown dataset `{}`", job.dataset)))?;
        let extractor = self
            .extractors
            .get(&job.extractor)
            .ok_or_else(|| Error::Config(format!("unknown extractor `{}`", job.extractor)))?;
        let transform = match &job.transform {
            Some(t) => Some(
                self.transforms
                    .get(t)
                    .ok_or_else(|| Error::Config(format!("unknown transform `{t}`")))?,
            ),
            None => None,
        };
        let needs_fv = matches!(job.axis, Axis::Informativeness | Axis::Disentanglement);
        let needs_transform = job.axis != Axis::Informativeness;
        if needs_fv && job.fv.is_none() {
            return Err(Error::Config("needs `fv`".into()));
        }
        if needs_transform && transform.is_none() {
            return Err(Error::Config("needs `transform`".into()));
        }
        if job.axis == Axis::Invariance && job.grid_points == 0 {
            return Err(Error::Config("grid_points must be >= 1".into()));
        }
        let modalities = [dataset.modality(), extractor.modality(), transform.map(|t| t.kind.modality())];
        let known: Vec<Modality> = modalities.into_iter().flatten().collect();
        if known.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Config(format!(
                "dataset `{}`, extractor `{}` and transform disagree on modality",
                job.dataset, job.extractor
            )));
        }
        if let (Some(t), Some(fv)) = (transform, &job.fv) {
            if job.axis == Axis::Disentanglement && t.to_spec().fv_target == *fv {
                return Err(Error::Config(format!(
                    "transform perturbs `{fv}`, the predicted factor; that is equivariance, not disentanglement"
                )));
            }
        }
        if let ExtractorConfig::External { pairs, .. } = extractor {
            match job.axis {
                Axis::Informativeness => {}
                Axis::PEquivariance | Axis::REquivariance => {
                    let t = job.transform.as_deref().unwrap_or_default();
                    if !pairs.contains_key(t) {
                        return Err(Error::Config(format!(
                            "external extractor `{}` has no stored pairs for transform `{t}`",
                            job.extractor
                        )));
                    }
                }
                Axis::Invariance | Axis::Disentanglement => {
                    return Err(Error::Config(format!(
                        "{} embeds freshly transformed media and needs a built-in extractor",
                        job.axis
                    )))
                }
            }
        }
        if job.export_media && (matches!(extractor, ExtractorConfig::External { .. }) || transform.is_none()) {
            return Err(Error::Config(
                "export_media needs a transform and a built-in extractor".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
