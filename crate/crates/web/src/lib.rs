//! Browser bindings: transform previews, an invariance curve and a small
//! P-equivariance probe, all on synthetic fixtures.

use repeval::axes::{eval_invariance, eval_p_equivariance, EvalSettings, ProbeKind};
use repeval::data::TransformSpec;
use repeval::extractors::ToyExtractorConfig;
use repeval::fixtures::{gen_gradient_image, gen_linear_action_pairs, shuffle_params, synthetic_image_dataset};
use repeval::transforms::{Media, Modality, TransformKind};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn image_kind(name: &str) -> Result<TransformKind, String> {
    let kind: TransformKind = serde_json::from_value(json!(name)).map_err(|_| format!("unknown transform `{name}`"))?;
    if kind.modality() != Modality::Image {
        return Err(format!("`{name}` is not an image transform"));
    }
    Ok(kind)
}

/// RGBA bytes of the gradient fixture after one image transform.
pub fn preview(kind: &str, param: f64, size: usize) -> Result<Vec<u8>, String> {
    let kind = image_kind(kind)?;
    let img = gen_gradient_image(size, size).map_err(|e| e.to_string())?;
    let out = match kind.apply(&Media::Image(img), param, 0).map_err(|e| e.to_string())? {
        Media::Image(img) => img,
        _ => unreachable!("image transforms return images"),
    };
    Ok(out
        .pixels()
        .chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 1.0].map(|v| (v * 255.0).round() as u8))
        .collect())
}

/// Mean clean-to-transformed cosine over a grid, as `[{param, cosine}]` JSON.
pub fn curve(kind: &str, grid_points: usize) -> Result<String, String> {
    let kind = image_kind(kind)?;
    let dataset = synthetic_image_dataset(40, 24, 1).map_err(|e| e.to_string())?;
    let ex = ToyExtractorConfig {
        seed: 2,
        dim: 64,
        modality: Modality::Image,
    }
    .build()
    .map_err(|e| e.to_string())?;
    let report = eval_invariance(&dataset, &TransformSpec::new(kind, 3), ex.as_ref(), grid_points).map_err(|e| e.to_string())?;
    let points: Vec<_> = report
        .curve
        .iter()
        .map(|p| json!({"param": p.param, "cosine": p.value}))
        .collect();
    Ok(serde_json::Value::from(points).to_string())
}

/// Test RMSE of a single-layer probe recovering the action strength on
/// linear-action pairs, and on the same pairs with shuffled parameters.
pub fn equivariance(n: usize, epochs: usize) -> Result<String, String> {
    let pairs = gen_linear_action_pairs(n, 16, 4).map_err(|e| e.to_string())?;
    let shuffled = shuffle_params(&pairs, 5).map_err(|e| e.to_string())?;
    let mut settings = EvalSettings::new(6);
    settings.adam.max_epochs = epochs;
    let rmse = |p| {
        eval_p_equivariance(p, ProbeKind::Slp, &settings)
            .map(|r| r.metric("rmse").unwrap_or(f64::NAN))
            .map_err(|e| e.to_string())
    };
    Ok(json!({"rmse": rmse(&pairs)?, "shuffled_rmse": rmse(&shuffled)?, "chance": 1.0 / 12f64.sqrt()}).to_string())
}

#[wasm_bindgen]
pub fn transform_preview(kind: &str, param: f64, size: usize) -> Result<Vec<u8>, JsValue> {
    preview(kind, param, size).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn invariance_curve(kind: &str, grid_points: usize) -> Result<String, JsValue> {
    curve(kind, grid_points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn p_equivariance(n: usize, epochs: usize) -> Result<String, JsValue> {
    equivariance(n, epochs).map_err(|e| JsValue::from_str(&e))
}
