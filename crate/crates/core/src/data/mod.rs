//! Manifests, the embedding container, datasets and transformed pairs.

mod container;
mod dataset;
mod manifest;
mod pairs;

pub use container::{read_embeddings, write_embeddings, EmbeddingStore, DTYPE_F32, MAGIC, VERSION};
pub use dataset::{embed_dataset, engine_tag, file_stem_for, ground_truth, load_media, save_media, Dataset, Sample};
pub use manifest::{load_manifest, parse_manifest, write_manifest, SampleRecord, SplitLabel};
pub(crate) use pairs::{check_failures, check_modalities};
pub use pairs::{
    export_transformed_media, materialize_pairs, read_param_log, write_param_log, PairedEmbeddingSet, ParamLogEntry,
    TransformSpec, MAX_FAILURE_FRACTION,
};
