use std::collections::HashMap;
use std::path::Path;

use crate::data::{read_embeddings, read_param_log, EmbeddingStore, PairedEmbeddingSet, SampleRecord};
use crate::error::{Error, Result};

const MISSING_SHOWN: usize = 10;

/// Reorders `store` to follow `ids`, failing with the first missing ids.
pub(crate) fn align(store: &EmbeddingStore, ids: &[String], what: &str) -> Result<EmbeddingStore> {
    let index: HashMap<&str, usize> = store.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let missing: Vec<&str> = ids
        .iter()
        .filter(|id| !index.contains_key(id.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(MISSING_SHOWN).copied().collect();
        return Err(Error::Alignment(format!(
            "{} ids missing from {what}; first: {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    let rows: Vec<usize> = ids.iter().map(|id| index[id.as_str()]).collect();
    EmbeddingStore::new(
        ids.to_vec(),
        store.matrix.select_rows(&rows),
        store.extractor_id.clone(),
        store.created_by.clone(),
    )
}

/// Assembles pairs from containers and a parameter log written by any
/// external tool. Rows are matched by id, in manifest order.
pub fn external_embeddings(
    manifest: &[SampleRecord],
    clean_store_path: &Path,
    transformed_store_path: &Path,
    param_log_path: &Path,
) -> Result<PairedEmbeddingSet> {
    let clean = read_embeddings(clean_store_path)?;
    let transformed = read_embeddings(transformed_store_path)?;
    if clean.dim() != transformed.dim() {
        return Err(Error::Format(format!(
            "clean store has dim {} but transformed store has dim {}",
            clean.dim(),
            transformed.dim()
        )));
    }
    let log = read_param_log(param_log_path)?;
    let params: HashMap<&str, (f64, f64)> = log.iter().map(|e| (e.id.as_str(), (e.raw, e.normalized))).collect();

    let ids: Vec<String> = manifest.iter().map(|r| r.id.clone()).collect();
    let z_clean = align(&clean, &ids, "clean store")?;
    let z_transformed = align(&transformed, &ids, "transformed store")?;
    let missing: Vec<&str> = ids
        .iter()
        .filter(|id| !params.contains_key(id.as_str()))
        .take(MISSING_SHOWN)
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Alignment(format!(
            "ids missing from parameter log; first: {}",
            missing.join(", ")
        )));
    }
    let (params_raw, params_normalized) = ids.iter().map(|id| params[id.as_str()]).unzip();
    PairedEmbeddingSet::new(
        ids,
        manifest.iter().map(|r| r.split).collect(),
        z_clean,
        z_transformed,
        params_raw,
        params_normalized,
    )
}
