//! The five evaluation procedures and their report types.

mod conditioned;
mod disentanglement;
mod equivariance;
mod informativeness;
mod invariance;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use conditioned::{ConditionedCache, ConditionedProbe, ParamProjector, PARAM_EMBED_DIM};
pub use disentanglement::{bucket_param, eval_disentanglement, BucketResult, DisentanglementGrid, BUCKETS};
pub use equivariance::{eval_p_equivariance, eval_r_equivariance, R_EQUIVARIANCE_HIDDEN};
pub use informativeness::{eval_informativeness, FvProbe, LabeledEmbeddings};
pub use invariance::{eval_invariance, invariance_grid, DEFAULT_GRID_POINTS};

use crate::data::SplitLabel;
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, Matrix, Split};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Hidden widths of the default MLP probe.
pub const MLP_HIDDEN: [usize; 2] = [512, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Informativeness,
    PEquivariance,
    REquivariance,
    Invariance,
    Disentanglement,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::Informativeness,
        Axis::PEquivariance,
        Axis::REquivariance,
        Axis::Invariance,
        Axis::Disentanglement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Informativeness => "informativeness",
            Axis::PEquivariance => "p_equivariance",
            Axis::REquivariance => "r_equivariance",
            Axis::Invariance => "invariance",
            Axis::Disentanglement => "disentanglement",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Slp,
    #[default]
    Mlp,
}

impl ProbeKind {
    pub fn hidden_dims(self) -> Vec<usize> {
        match self {
            ProbeKind::Slp => Vec::new(),
            ProbeKind::Mlp => MLP_HIDDEN.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Slp => "slp",
            ProbeKind::Mlp => "mlp",
        }
    }
}

/// Optimizer settings and the base seed for probe initialization and
/// shuffling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSettings {
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub seed: u64,
}

impl EvalSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            adam: AdamConfig::default(),
            seed,
        }
    }

    pub(crate) fn probe_seed(&self, what: &str) -> u64 {
        seed::derive(self.seed, what)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn of(splits: &[SplitLabel]) -> Self {
        let count = |l| splits.iter().filter(|s| **s == l).count();
        Self {
            train: count(SplitLabel::Train),
            val: count(SplitLabel::Val),
            test: count(SplitLabel::Test),
        }
    }
}

/// One point of a parameter curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub param: f64,
    pub normalized: f64,
    pub value: f64,
    pub count: usize,
}

/// Metrics of one axis evaluation, with enough configuration to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub schema_version: u32,
    pub axis: Axis,
    pub extractor_id: String,
    pub fv: Option<String>,
    pub transform: Option<String>,
    /// `slp`, `mlp`, or `none` when no probe is trained.
    pub probe: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub curve: Vec<CurvePoint>,
    #[serde(default)]
    pub disentanglement: Option<DisentanglementGrid>,
    pub counts: SplitCounts,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl AxisReport {
    pub(crate) fn new(axis: Axis, extractor_id: impl Into<String>, probe: &str, counts: SplitCounts) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            axis,
            extractor_id: extractor_id.into(),
            fv: None,
            transform: None,
            probe: probe.to_string(),
            metrics: BTreeMap::new(),
            curve: Vec::new(),
            disentanglement: None,
            counts,
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// Every metric and curve value must be finite.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Version(format!(
                "report schema {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let curve = self.curve.iter().flat_map(|p| [p.param, p.normalized, p.value]);
        let grid = self
            .disentanglement
            .iter()
            .flat_map(|g| g.buckets.iter().flat_map(|b| [b.rmse, b.delta_rmse]));
        if let Some((name, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("{} report: metric {name} = {v}", self.axis)));
        }
        if curve.chain(grid).any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("{} report has non-finite curve values", self.axis)));
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

pub(crate) fn split_indices(splits: &[SplitLabel]) -> Result<[Vec<usize>; 3]> {
    let pick = |l| (0..splits.len()).filter(|&i| splits[i] == l).collect::<Vec<_>>();
    let out = [pick(SplitLabel::Train), pick(SplitLabel::Val), pick(SplitLabel::Test)];
    if out.iter().any(Vec::is_empty) {
        return Err(Error::Config(format!(
            "train, val and test splits must be non-empty (got {}/{}/{})",
            out[0].len(),
            out[1].len(),
            out[2].len()
        )));
    }
    Ok(out)
}

/// Train/val/test splits of `(x, y)` by index sets.
pub(crate) fn make_splits(x: &Matrix, y: &Matrix, idx: &[Vec<usize>; 3]) -> Result<[Split; 3]> {
    let mk = |i: &[usize]| Split::new(x.select_rows(i), y.select_rows(i));
    Ok([mk(&idx[0])?, mk(&idx[1])?, mk(&idx[2])?])
}

/// RMSE of a column of predictions against `f64` targets.
pub(crate) fn column_rmse(pred: &Matrix, target: &[f64]) -> f64 {
    let sum: f64 = pred.data().iter().zip(target).map(|(p, t)| (*p as f64 - t).powi(2)).sum();
    (sum / target.len() as f64).sqrt()
}

/// RMSE of predicting the training mean on the test targets.
pub(crate) fn constant_baseline(train: &[f64], test: &[f64]) -> f64 {
    let m = train.iter().sum::<f64>() / train.len() as f64;
    (test.iter().map(|t| (t - m).powi(2)).sum::<f64>() / test.len() as f64).sqrt()
}
