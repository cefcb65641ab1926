use serde_json::json;

use super::{Axis, AxisReport, CurvePoint, SplitCounts};
use crate::data::{check_failures, check_modalities, Dataset, SplitLabel, TransformSpec};
use crate::error::{Error, Result};
use crate::extractors::FeatureExtractor;
use crate::numerics::cosine_similarity;

pub const DEFAULT_GRID_POINTS: usize = 11;

/// `points` evenly spaced values over the range, inclusive. The neutral
/// parameter is added when the transform has an identity in range that the
/// grid misses, so the curve always shows the unperturbed point.
pub fn invariance_grid(spec: &TransformSpec, points: usize) -> Vec<f64> {
    let (min, max) = spec.range;
    let mut grid: Vec<f64> = if points <= 1 || max == min {
        vec![min]
    } else {
        (0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let neutral = spec.neutral;
    if spec.kind.has_identity() && (min..=max).contains(&neutral) && !grid.iter().any(|g| (g - neutral).abs() < 1e-12) {
        grid.push(neutral);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

/// Mean cosine between clean and transformed test embeddings at each grid
/// parameter. No probe is trained.
pub fn eval_invariance(
    dataset: &Dataset,
    spec: &TransformSpec,
    extractor: &dyn FeatureExtractor,
    grid_points: usize,
) -> Result<AxisReport> {
    check_modalities(dataset, spec, extractor)?;
    let test = dataset.indices_of(SplitLabel::Test);
    if test.is_empty() {
        return Err(Error::Config("invariance needs a non-empty test split".into()));
    }
    let samples = dataset.samples();
    let clean = test
        .iter()
        .map(|&i| extractor.extract(&samples[i].media))
        .collect::<Result<Vec<_>>>()?;

    let grid = invariance_grid(spec, grid_points);
    let mut curve = Vec::with_capacity(grid.len());
    for &param in &grid {
        let mut total = 0.0;
        let mut count = 0;
        let mut failures = Vec::new();
        for (k, &i) in test.iter().enumerate() {
            let id = &samples[i].record.id;
            let cos = spec
                .apply(&samples[i].media, param, id)
                .and_then(|m| extractor.extract(&m))
                .and_then(|zt| cosine_similarity(&clean[k], &zt));
            match cos {
                Ok(c) => {
                    total += c;
                    count += 1;
                }
                Err(e) => failures.push((id.clone(), e.to_string())),
            }
        }
        check_failures(&failures, test.len())?;
        if count == 0 {
            return Err(Error::Degenerate(format!("no sample could be scored at parameter {param}")));
        }
        curve.push(CurvePoint {
            param,
            normalized: spec.normalize(param),
            value: total / count as f64,
            count,
        });
    }

    let mut report = AxisReport::new(Axis::Invariance, extractor.id(), "none", SplitCounts::of(&splits(dataset)));
    report.fv = Some(spec.fv_target.clone());
    report.transform = Some(spec.kind.name());
    let values: Vec<f64> = curve.iter().map(|p| p.value).collect();
    report
        .metrics
        .insert("cosine_mean".into(), values.iter().sum::<f64>() / values.len() as f64);
    report
        .metrics
        .insert("cosine_min".into(), values.iter().copied().fold(f64::INFINITY, f64::min));
    if let Some(p) = curve.iter().find(|p| p.param == spec.neutral) {
        report.metrics.insert("cosine_at_neutral".into(), p.value);
    }
    report.curve = curve;
    report.config = json!({ "transform": spec, "grid_points": grid_points });
    report.seeds.insert("transform".into(), spec.seed);
    report.finish()
}

fn splits(dataset: &Dataset) -> Vec<SplitLabel> {
    dataset.samples().iter().map(|s| s.record.split).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::gen_disentangled_store;
    use crate::transforms::{Media, Modality, TransformKind};

    #[test]
    fn grid_includes_neutral() {
        let spec = TransformSpec::new(TransformKind::TimeStretch, 0);
        let grid = invariance_grid(&spec, 11);
        assert_eq!(grid.len(), 12);
        assert!(grid.contains(&1.0) && grid[0] == 0.5 && grid[11] == 2.0);
        let hue = invariance_grid(&TransformSpec::new(TransformKind::HueShift, 0), 11);
        assert_eq!(hue.len(), 11);
        assert_eq!(invariance_grid(&spec.collapsed(), 11), vec![1.0]);
    }

    #[test]
    fn neutral_point_is_exact() {
        let fx = gen_disentangled_store(60, 6, &[2, 2], 1).unwrap();
        let spec = TransformSpec::new(TransformKind::FactorShift(1), 4);
        let r = eval_invariance(&fx.dataset, &spec, &fx.extractor, 11).unwrap();
        assert!((r.metric("cosine_at_neutral").unwrap() - 1.0).abs() < 1e-5);
        assert!(r.metric("cosine_min").unwrap() < 0.99);
    }

    struct Constant;

    impl FeatureExtractor for Constant {
        fn id(&self) -> String {
            "constant".into()
        }
        fn dim(&self) -> usize {
            3
        }
        fn modality(&self) -> Modality {
            Modality::Factors
        }
        fn extract(&self, _: &Media) -> Result<Vec<f32>> {
            Ok(vec![1.0, 2.0, 3.0])
        }
    }

    #[test]
    fn constant_extractor_is_invariant() {
        let fx = gen_disentangled_store(40, 4, &[1], 1).unwrap();
        let spec = TransformSpec::new(TransformKind::FactorShift(0), 4);
        let r = eval_invariance(&fx.dataset, &spec, &Constant, 5).unwrap();
        for p in &r.curve {
            assert!((p.value - 1.0).abs() < 1e-6);
        }
    }
}
