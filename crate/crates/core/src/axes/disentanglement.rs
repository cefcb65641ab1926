use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::informativeness::FvProbe;
use super::{column_rmse, Axis, AxisReport, SplitCounts};
use crate::data::{check_failures, check_modalities, Dataset, SplitLabel, TransformSpec};
use crate::error::{Error, Result};
use crate::extractors::FeatureExtractor;
use crate::numerics::Matrix;
use crate::seed;

/// Signed fractions of the distance from the neutral point to the range
/// endpoints: `[-100%, -50%]`, `[-50%, 0]`, `[0, 50%]`, `[50%, 100%]`.
pub const BUCKETS: [(&str, f64, f64); 4] = [("--", -1.0, -0.5), ("-", -0.5, 0.0), ("+", 0.0, 0.5), ("++", 0.5, 1.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketResult {
    pub label: String,
    pub fraction: (f64, f64),
    pub params: (f64, f64),
    pub rmse: f64,
    pub delta_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentanglementGrid {
    pub predicted_fv: String,
    pub perturbed_fv: String,
    pub transform: String,
    pub clean_rmse: f64,
    pub buckets: Vec<BucketResult>,
}

/// Parameter at signed fraction `f` of the way from neutral to an endpoint.
pub fn bucket_param(spec: &TransformSpec, f: f64) -> f64 {
    let (min, max) = spec.range;
    if f >= 0.0 {
        spec.neutral + f * (max - spec.neutral)
    } else {
        spec.neutral + f.abs() * (min - spec.neutral)
    }
}

/// Change in the test RMSE of a factor-`X` probe when a transform of a
/// different factor `Y` is applied, per bucket of parameter strength.
pub fn eval_disentanglement(
    probe: &FvProbe,
    dataset: &Dataset,
    spec: &TransformSpec,
    extractor: &dyn FeatureExtractor,
) -> Result<AxisReport> {
    check_modalities(dataset, spec, extractor)?;
    if spec.fv_target == probe.fv {
        return Err(Error::Config(format!(
            "transform {} perturbs `{}`, the factor the probe predicts; that is equivariance, not disentanglement",
            spec.kind, probe.fv
        )));
    }
    let test = dataset.indices_of(SplitLabel::Test);
    if test.is_empty() {
        return Err(Error::Config("disentanglement needs a non-empty test split".into()));
    }
    let samples = dataset.samples();
    let targets: Vec<f64> = test.iter().map(|&i| dataset.fv_value(i, &probe.fv)).collect::<Result<_>>()?;
    let embed = |rows: Vec<Vec<f32>>| Matrix::from_rows(&rows).and_then(|m| probe.predict(&m));

    let clean = test
        .iter()
        .map(|&i| extractor.extract(&samples[i].media))
        .collect::<Result<Vec<_>>>()?;
    let clean_rmse = column_rmse(&embed(clean)?, &targets);

    let mut buckets = Vec::with_capacity(BUCKETS.len());
    for (label, lo, hi) in BUCKETS {
        let mut rows = Vec::with_capacity(test.len());
        let mut kept = Vec::with_capacity(test.len());
        let mut failures = Vec::new();
        for (k, &i) in test.iter().enumerate() {
            let id = &samples[i].record.id;
            let f: f64 = seed::rng(seed::derive2(spec.seed, id, label)).gen_range(lo..=hi);
            let param = bucket_param(spec, f);
            match spec.apply(&samples[i].media, param, id).and_then(|m| extractor.extract(&m)) {
                Ok(z) => {
                    rows.push(z);
                    kept.push(targets[k]);
                }
                Err(e) => failures.push((id.clone(), e.to_string())),
            }
        }
        check_failures(&failures, test.len())?;
        let rmse = column_rmse(&embed(rows)?, &kept);
        let (a, b) = (bucket_param(spec, lo), bucket_param(spec, hi));
        buckets.push(BucketResult {
            label: label.to_string(),
            fraction: (lo, hi),
            params: (a.min(b), a.max(b)),
            rmse,
            delta_rmse: rmse - clean_rmse,
        });
    }

    let grid = DisentanglementGrid {
        predicted_fv: probe.fv.clone(),
        perturbed_fv: spec.fv_target.clone(),
        transform: spec.kind.name(),
        clean_rmse,
        buckets,
    };
    let splits: Vec<SplitLabel> = samples.iter().map(|s| s.record.split).collect();
    let mut report = AxisReport::new(
        Axis::Disentanglement,
        extractor.id(),
        probe.kind.name(),
        SplitCounts::of(&splits),
    );
    report.fv = Some(probe.fv.clone());
    report.transform = Some(spec.kind.name());
    report.metrics.insert("clean_rmse".into(), clean_rmse);
    for b in &grid.buckets {
        report.metrics.insert(format!("delta_rmse[{}]", b.label), b.delta_rmse);
    }
    let worst = grid.buckets.iter().map(|b| b.delta_rmse.abs()).fold(0.0, f64::max);
    report.metrics.insert("max_abs_delta_rmse".into(), worst);
    report.disentanglement = Some(grid);
    report.config = json!({ "transform": spec, "buckets": BUCKETS });
    report.seeds.insert("transform".into(), spec.seed);
    report.finish()
}
