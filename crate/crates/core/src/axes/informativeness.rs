use serde_json::json;

use super::{column_rmse, constant_baseline, make_splits, split_indices, Axis, AxisReport, EvalSettings, ProbeKind, SplitCounts};
use crate::data::{Dataset, EmbeddingStore, SplitLabel};
use crate::error::{Error, Result};
use crate::numerics::{train_probe, Matrix, Probe, ProbeSpec};

/// Embeddings with one factor value per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    pub store: EmbeddingStore,
    pub splits: Vec<SplitLabel>,
    pub fv: String,
    pub targets: Vec<f64>,
}

impl LabeledEmbeddings {
    pub fn new(store: EmbeddingStore, splits: Vec<SplitLabel>, fv: impl Into<String>, targets: Vec<f64>) -> Result<Self> {
        if splits.len() != store.len() || targets.len() != store.len() {
            return Err(Error::Alignment(format!(
                "{} embeddings, {} split labels, {} targets",
                store.len(),
                splits.len(),
                targets.len()
            )));
        }
        if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
            return Err(Error::Validation(format!("non-finite target {t}")));
        }
        Ok(Self {
            store,
            splits,
            fv: fv.into(),
            targets,
        })
    }

    /// Pairs a store with ground truth from `dataset`; ids must match in order.
    pub fn from_dataset(dataset: &Dataset, store: EmbeddingStore, fv: &str) -> Result<Self> {
        if store.ids != dataset.ids() {
            return Err(Error::Alignment("store ids do not follow the dataset order".into()));
        }
        let targets = dataset.fv_values(fv)?;
        let splits = dataset.samples().iter().map(|s| s.record.split).collect();
        Self::new(store, splits, fv, targets)
    }
}

/// A probe trained to predict one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FvProbe {
    pub fv: String,
    pub probe: Probe,
    pub kind: ProbeKind,
}

impl FvProbe {
    pub fn predict(&self, z: &Matrix) -> Result<Matrix> {
        self.probe.forward(z)
    }
}

/// Trains a probe `z → fv` on train, early-stops on val, reports test RMSE.
pub fn eval_informativeness(data: &LabeledEmbeddings, kind: ProbeKind, settings: &EvalSettings) -> Result<(AxisReport, FvProbe)> {
    let idx = split_indices(&data.splits)?;
    let x = &data.store.matrix;
    let y = Matrix::column(&data.targets.iter().map(|v| *v as f32).collect::<Vec<_>>())?;
    let [train, val, test] = make_splits(x, &y, &idx)?;

    let probe_seed = settings.probe_seed(&format!("informativeness/{}", data.fv));
    let spec = ProbeSpec::mlp(x.cols(), &kind.hidden_dims(), 1, probe_seed);
    let fit = train_probe(&spec, &train, &val, &settings.adam)?;

    let test_targets: Vec<f64> = idx[2].iter().map(|&i| data.targets[i]).collect();
    let train_targets: Vec<f64> = idx[0].iter().map(|&i| data.targets[i]).collect();
    let rmse = column_rmse(&fit.model.forward(&test.x)?, &test_targets);

    let mut report = AxisReport::new(
        Axis::Informativeness,
        &data.store.extractor_id,
        kind.name(),
        SplitCounts::of(&data.splits),
    );
    report.fv = Some(data.fv.clone());
    report.metrics.insert("rmse".into(), rmse);
    report.metrics.insert("mse".into(), rmse * rmse);
    report
        .metrics
        .insert("baseline_rmse".into(), constant_baseline(&train_targets, &test_targets));
    report.metrics.insert("best_epoch".into(), fit.best_epoch as f64);
    report.metrics.insert("stopped_epoch".into(), fit.stopped_epoch as f64);
    report.config = json!({ "adam": settings.adam, "seed": settings.seed, "hidden_dims": kind.hidden_dims() });
    report.seeds.insert("probe".into(), probe_seed);
    let probe = FvProbe {
        fv: data.fv.clone(),
        probe: fit.model,
        kind,
    };
    Ok((report.finish()?, probe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{gen_disentangled_store, split_for};

    fn settings() -> EvalSettings {
        let mut s = EvalSettings::new(3);
        s.adam.max_epochs = 1000;
        s
    }

    fn labeled(n: usize, targets: impl Fn(usize) -> f64) -> LabeledEmbeddings {
        let fx = gen_disentangled_store(n, 6, &[2], 1).unwrap();
        let t = (0..n).map(targets).collect();
        LabeledEmbeddings::new(fx.store, (0..n).map(|i| split_for(i, n)).collect(), "t", t).unwrap()
    }

    #[test]
    fn constant_target_is_learned() {
        let data = labeled(1000, |_| 0.7);
        let (report, _) = eval_informativeness(&data, ProbeKind::Slp, &settings()).unwrap();
        assert!(report.metric("rmse").unwrap() < 1e-2, "{:?}", report.metrics);
    }

    #[test]
    fn single_factor_is_recovered() {
        let fx = gen_disentangled_store(1000, 8, &[2], 2).unwrap();
        let data = LabeledEmbeddings::from_dataset(&fx.dataset, fx.store.clone(), "f0").unwrap();
        let (report, probe) = eval_informativeness(&data, ProbeKind::Slp, &settings()).unwrap();
        assert!(report.metric("rmse").unwrap() < 0.02, "{:?}", report.metrics);
        assert_eq!(probe.fv, "f0");
    }

    #[test]
    fn missing_fv_is_config_error() {
        let fx = gen_disentangled_store(20, 4, &[1], 2).unwrap();
        let err = LabeledEmbeddings::from_dataset(&fx.dataset, fx.store.clone(), "hue").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
