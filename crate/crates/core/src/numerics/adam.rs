use serde::{Deserialize, Serialize};

use super::probe::{Probe, ProbeGrads};
use crate::error::{Error, Result};

/// Optimizer and training-loop settings.
///
/// Weight decay is coupled: it is added to the gradient as an L2 term before
/// the moment updates, and applies to biases as well as weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("adam: {msg}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) || !(self.weight_decay >= 0.0) {
            return fail("epsilon must be > 0 and weight_decay >= 0");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be >= 1");
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f32>>,
    second: Vec<Vec<f32>>,
    step: u64,
}

impl AdamState {
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn for_probe(probe: &Probe) -> Self {
        Self::new(&probe.tensor_sizes())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update over matching parameter and gradient
    /// tensors.
    pub fn update(&mut self, params: Vec<&mut [f32]>, grads: &[&[f32]], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::shape(
                format!("{} tensors", self.first.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first[i].len() || g.len() != p.len() {
                return Err(Error::shape(
                    format!("tensor {i} of {} values", self.first[i].len()),
                    format!("{} params / {} grads", p.len(), g.len()),
                ));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let correction1 = 1.0 - b1.powi(t);
        let correction2 = 1.0 - b2.powi(t);
        let (lr, wd, eps) = (cfg.learning_rate, cfg.weight_decay, cfg.epsilon);

        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            for j in 0..p.len() {
                let w = p[j] as f64;
                let grad = g[j] as f64 + wd * w;
                let mj = b1 * m[j] as f64 + (1.0 - b1) * grad;
                let vj = b2 * v[j] as f64 + (1.0 - b2) * grad * grad;
                m[j] = mj as f32;
                v[j] = vj as f32;
                let m_hat = mj / correction1;
                let v_hat = vj / correction2;
                p[j] = (w - lr * m_hat / (v_hat.sqrt() + eps)) as f32;
            }
        }
        Ok(())
    }
}

/// Applies one Adam update to `probe` in place.
pub fn adam_step(probe: &mut Probe, grads: &ProbeGrads, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    let g = grads.tensors();
    state.update(probe.tensors_mut(), &g, cfg)
}
