use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

/// Mean squared error over all elements and its gradient
/// `2·(pred − target)/count`.
pub fn mse_loss_and_grad(pred: &Matrix, target: &Matrix) -> Result<(f32, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            format!("{}x{}", pred.rows(), pred.cols()),
            format!("{}x{}", target.rows(), target.cols()),
        ));
    }
    let count = pred.data().len().max(1) as f64;
    let mut sum = 0.0f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let diff = p as f64 - t as f64;
        sum += diff * diff;
        *g = (2.0 * diff / count) as f32;
    }
    Ok(((sum / count) as f32, grad))
}

pub fn mse(pred: &[f32], target: &[f32]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(Error::Degenerate("mean squared error of an empty set".into()));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = *p as f64 - *t as f64;
            d * d
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

pub fn rmse(pred: &[f32], target: &[f32]) -> Result<f64> {
    mse(pred, target).map(f64::sqrt)
}

pub fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine similarity of a zero vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn l2_normalize(v: &[f32]) -> Result<Vec<f32>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero vector".into()));
    }
    Ok(v.iter().map(|x| (*x as f64 / n) as f32).collect())
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    mean(&values.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>()).sqrt()
}
