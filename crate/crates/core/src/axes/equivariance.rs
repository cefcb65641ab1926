use serde_json::json;

use super::conditioned::{ConditionedProbe, PARAM_EMBED_DIM};
use super::{column_rmse, constant_baseline, make_splits, split_indices, Axis, AxisReport, EvalSettings, ProbeKind, SplitCounts};
use crate::data::PairedEmbeddingSet;
use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, evaluate_mse, fit, l2_normalize, train_probe, Matrix, ProbeSpec, Trainable};

/// Hidden widths of the representation-equivariance probe.
pub const R_EQUIVARIANCE_HIDDEN: [usize; 2] = [512, 512];

fn check_dims(pairs: &PairedEmbeddingSet) -> Result<()> {
    if pairs.z_clean.dim() != pairs.z_transformed.dim() {
        return Err(Error::shape(pairs.z_clean.dim(), pairs.z_transformed.dim()));
    }
    Ok(())
}

fn named(pairs: &PairedEmbeddingSet, axis: Axis, probe: &str) -> AxisReport {
    AxisReport::new(axis, &pairs.z_clean.extractor_id, probe, SplitCounts::of(&pairs.splits))
}

/// Predicts the normalized parameter from `z ⊕ z'`.
pub fn eval_p_equivariance(pairs: &PairedEmbeddingSet, kind: ProbeKind, settings: &EvalSettings) -> Result<AxisReport> {
    check_dims(pairs)?;
    let idx = split_indices(&pairs.splits)?;
    let x = pairs.z_clean.matrix.hstack(&pairs.z_transformed.matrix)?;
    let y = Matrix::column(&pairs.params_normalized.iter().map(|v| *v as f32).collect::<Vec<_>>())?;
    let [train, val, test] = make_splits(&x, &y, &idx)?;

    let probe_seed = settings.probe_seed("p_equivariance");
    let spec = ProbeSpec::mlp(x.cols(), &kind.hidden_dims(), 1, probe_seed);
    let result = train_probe(&spec, &train, &val, &settings.adam)?;

    let pick = |ix: &[usize]| ix.iter().map(|&i| pairs.params_normalized[i]).collect::<Vec<_>>();
    let test_targets = pick(&idx[2]);
    let rmse = column_rmse(&result.model.forward(&test.x)?, &test_targets);

    let mut report = named(pairs, Axis::PEquivariance, kind.name());
    report.metrics.insert("rmse".into(), rmse);
    report.metrics.insert("mse".into(), rmse * rmse);
    report
        .metrics
        .insert("baseline_rmse".into(), constant_baseline(&pick(&idx[0]), &test_targets));
    report.metrics.insert("best_epoch".into(), result.best_epoch as f64);
    report.config = json!({ "adam": settings.adam, "seed": settings.seed, "hidden_dims": kind.hidden_dims() });
    report.seeds.insert("probe".into(), probe_seed);
    report.finish()
}

fn normalized_rows(m: &Matrix) -> Result<Matrix> {
    let rows = m
        .row_iter()
        .enumerate()
        .map(|(i, r)| l2_normalize(r).map_err(|_| Error::Degenerate(format!("embedding row {i} is zero"))))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

fn mean_row_cosine(a: &Matrix, b: &Matrix) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in a.row_iter().zip(b.row_iter()) {
        // A zero prediction carries no direction; score it as orthogonal.
        total += cosine_similarity(x, y).unwrap_or(0.0);
    }
    Ok(total / a.rows() as f64)
}

/// Predicts the transformed embedding from the clean one and the projected
/// parameter; projector and probe train jointly on MSE.
pub fn eval_r_equivariance(pairs: &PairedEmbeddingSet, settings: &EvalSettings) -> Result<AxisReport> {
    check_dims(pairs)?;
    let idx = split_indices(&pairs.splits)?;
    let z = normalized_rows(&pairs.z_clean.matrix)?;
    let zt = normalized_rows(&pairs.z_transformed.matrix)?;
    let p = Matrix::column(&pairs.params_normalized.iter().map(|v| *v as f32).collect::<Vec<_>>())?;
    let x = z.hstack(&p)?;
    let [train, val, test] = make_splits(&x, &zt, &idx)?;

    let probe_seed = settings.probe_seed("r_equivariance");
    let model = ConditionedProbe::init(pairs.dim(), &R_EQUIVARIANCE_HIDDEN, pairs.dim(), probe_seed)?;
    let shuffle_seed = settings.probe_seed("r_equivariance/shuffle");
    let result = fit(model, &train, &val, &settings.adam, shuffle_seed)?;

    let pred = result.model.predict(&test.x)?;
    let mse = evaluate_mse(&result.model, &test)? as f64;
    let cosine = mean_row_cosine(&pred, &test.y)?;
    let identity = mean_row_cosine(&test.x.column_range(0, pairs.dim()), &test.y)?;

    let mut report = named(pairs, Axis::REquivariance, "mlp");
    report.metrics.insert("mse".into(), mse);
    report.metrics.insert("cosine_mean".into(), cosine);
    report.metrics.insert("identity_cosine_mean".into(), identity);
    report.metrics.insert("best_epoch".into(), result.best_epoch as f64);
    report.config = json!({
        "adam": settings.adam,
        "seed": settings.seed,
        "hidden_dims": R_EQUIVARIANCE_HIDDEN,
        "param_embed_dim": PARAM_EMBED_DIM,
    });
    report.seeds.insert("probe".into(), probe_seed);
    report.seeds.insert("shuffle".into(), shuffle_seed);
    report.finish()
}
