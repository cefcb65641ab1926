use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{AdamConfig, AdamState};
use super::matrix::Matrix;
use super::metrics::mse_loss_and_grad;
use super::probe::{probe_init, Probe, ProbeSpec};
use crate::error::{Error, Result};

/// A model trainable by [`fit`]: forward with a cache, backward to flat
/// parameter gradients, and mutable access to the same tensors in the same
/// order.
pub trait Trainable: Clone {
    type Cache;

    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict(&self, x: &Matrix) -> Result<Matrix>;
    fn forward_train(&self, x: &Matrix) -> Result<(Matrix, Self::Cache)>;
    fn backward(&self, cache: &Self::Cache, output_grad: &Matrix) -> Result<Vec<Vec<f32>>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f32]>;
    fn tensor_sizes(&self) -> Vec<usize>;
}

/// Inputs and targets with matching row counts.
#[derive(Debug, Clone)]
pub struct Split {
    pub x: Matrix,
    pub y: Matrix,
}

impl Split {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::shape(
                format!("{} target rows", x.rows()),
                format!("{} target rows", y.rows()),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on validation loss. Only a strict
/// decrease counts as improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f32,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f32::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f32) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f32 {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome<M> {
    /// Weights from the epoch with the lowest validation loss.
    pub model: M,
    pub train_loss_history: Vec<f32>,
    pub val_loss_history: Vec<f32>,
    /// Last epoch that ran, counted from 1.
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

/// Training outcome for a plain probe.
pub type TrainResult = FitOutcome<Probe>;

/// Full-set MSE, evaluated in chunks.
pub fn evaluate_mse<M: Trainable>(model: &M, split: &Split) -> Result<f32> {
    const CHUNK: usize = 256;
    let n = split.len();
    let mut total = 0.0f64;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let pred = model.predict(&split.x.select_rows(&idx))?;
        let (loss, _) = mse_loss_and_grad(&pred, &split.y.select_rows(&idx))?;
        total += loss as f64 * (end - start) as f64;
        start = end;
    }
    Ok((total / n as f64) as f32)
}

/// Mini-batch Adam on MSE with per-epoch shuffling from `seed` and early
/// stopping on validation loss.
pub fn fit<M: Trainable>(mut model: M, train: &Split, val: &Split, cfg: &AdamConfig, seed: u64) -> Result<FitOutcome<M>> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(format!(
            "training needs non-empty splits (train {}, val {})",
            train.len(),
            val.len()
        )));
    }
    for (name, split) in [("train", train), ("val", val)] {
        if split.x.cols() != model.input_dim() || split.y.cols() != model.output_dim() {
            return Err(Error::shape(
                format!("{name} split {}->{}", model.input_dim(), model.output_dim()),
                format!("{}->{}", split.x.cols(), split.y.cols()),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = AdamState::new(&model.tensor_sizes());
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut stopped = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(cfg.batch_size) {
            let x = train.x.select_rows(batch);
            let y = train.y.select_rows(batch);
            let (pred, cache) = model.forward_train(&x)?;
            let (loss, grad) = mse_loss_and_grad(&pred, &y)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss as f64 * batch.len() as f64;
            let grads = model.backward(&cache, &grad)?;
            let views: Vec<&[f32]> = grads.iter().map(Vec::as_slice).collect();
            state.update(model.tensors_mut(), &views, cfg)?;
        }
        let train_loss = (epoch_loss / train.len() as f64) as f32;
        let val_loss = evaluate_mse(&model, val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        train_hist.push(train_loss);
        val_hist.push(val_loss);
        stopped = epoch;
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = model.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    Ok(FitOutcome {
        model: best,
        train_loss_history: train_hist,
        val_loss_history: val_hist,
        stopped_epoch: stopped,
        best_epoch: stopper.best_epoch(),
    })
}

/// Initializes a probe from `spec` and fits it; shuffling is seeded from
/// `spec.seed` as well.
pub fn train_probe(spec: &ProbeSpec, train: &Split, val: &Split, cfg: &AdamConfig) -> Result<TrainResult> {
    let probe = probe_init(spec)?;
    fit(probe, train, val, cfg, spec.seed ^ 0x5348_5546_464c_4521)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_after_patience_on_rising_loss() {
        let mut stop = EarlyStopping::new(10);
        let mut last = 0;
        for epoch in 1..=100 {
            last = epoch;
            if stop.observe(epoch, epoch as f32) == StopDecision::Stop {
                break;
            }
        }
        assert_eq!(last, 11);
        assert_eq!(stop.best_epoch(), 1);
    }

    #[test]
    fn plateau_is_not_improvement() {
        let mut stop = EarlyStopping::new(2);
        assert_eq!(stop.observe(1, 1.0), StopDecision::Improved);
        assert_eq!(stop.observe(2, 1.0), StopDecision::Continue);
        assert_eq!(stop.observe(3, 1.0), StopDecision::Stop);
    }

    #[test]
    fn empty_split_is_config_error() {
        let spec = ProbeSpec::slp(2, 1, 0);
        let full = Split::new(Matrix::zeros(4, 2), Matrix::zeros(4, 1)).unwrap();
        let empty = Split::new(Matrix::zeros(0, 2), Matrix::zeros(0, 1)).unwrap();
        let cfg = AdamConfig::default();
        assert!(matches!(train_probe(&spec, &empty, &full, &cfg), Err(Error::Config(_))));
        assert!(matches!(train_probe(&spec, &full, &empty, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let spec = ProbeSpec::mlp(2, &[8], 1, 0);
        let x = Matrix::from_vec(8, 2, (0..16).map(|i| (i as f32) * 1e18).collect()).unwrap();
        let y = Matrix::from_vec(8, 1, vec![1e30; 8]).unwrap();
        let split = Split::new(x, y).unwrap();
        let cfg = AdamConfig {
            learning_rate: 1e30,
            ..AdamConfig::default()
        };
        assert!(matches!(
            train_probe(&spec, &split, &split, &cfg),
            Err(Error::Divergence { .. })
        ));
    }
}
