//! Dense linear algebra, shallow probes, Adam and the training loop.

mod adam;
mod matrix;
mod metrics;
mod probe;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use matrix::Matrix;
pub use metrics::{cosine_similarity, l2_normalize, mean, mse, mse_loss_and_grad, norm, rmse, std_dev};
pub use probe::{probe_init, ForwardCache, Layer, LayerGrads, Probe, ProbeGrads, ProbeSpec};
pub use train::{evaluate_mse, fit, train_probe, EarlyStopping, FitOutcome, Split, StopDecision, TrainResult, Trainable};
