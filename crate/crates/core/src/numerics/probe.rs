use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::train::Trainable;
use crate::error::{Error, Result};

/// Architecture of a shallow probe. An empty `hidden_dims` is a single
/// affine layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn slp(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dims: Vec::new(),
            output_dim,
            seed,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dims: &[usize], output_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dims: hidden_dims.to_vec(),
            output_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!(
                "probe dimensions must all be >= 1 (input {}, hidden {:?}, output {})",
                self.input_dim, self.hidden_dims, self.output_dim
            )));
        }
        Ok(())
    }

    /// `(fan_out, fan_in)` per layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// One affine layer. `weight` is `fan_out × fan_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    spec: ProbeSpec,
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub bias: Vec<f32>,
}

/// Gradients of a scalar objective with respect to every layer and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrads {
    pub layers: Vec<LayerGrads>,
    pub input: Matrix,
}

impl ProbeGrads {
    pub fn tensors(&self) -> Vec<&[f32]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data(), l.bias.as_slice()])
            .collect()
    }

    pub fn into_tensors(self) -> Vec<Vec<f32>> {
        self.layers.into_iter().flat_map(|l| [l.weight.into_vec(), l.bias]).collect()
    }
}

/// Layer inputs recorded during a forward pass: `[x, h1, h2, ...]`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
}

/// Uniform `±1/√fan_in` weights from a generator seeded by `spec.seed`,
/// zero biases.
pub fn probe_init(spec: &ProbeSpec) -> Result<Probe> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let layers = spec
        .layer_shapes()
        .into_iter()
        .map(|(fan_out, fan_in)| {
            let bound = 1.0 / (fan_in as f32).sqrt();
            let data = (0..fan_out * fan_in).map(|_| rng.gen_range(-bound..=bound)).collect();
            Layer {
                weight: Matrix::from_vec(fan_out, fan_in, data).expect("sized by construction"),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(Probe {
        spec: spec.clone(),
        layers,
    })
}

impl Probe {
    /// Assembles a probe from explicit layers, checking that shapes chain.
    pub fn from_layers(spec: ProbeSpec, layers: Vec<Layer>) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::shape(
                format!("{} layers", shapes.len()),
                format!("{} layers", layers.len()),
            ));
        }
        for (i, ((out, inp), layer)) in shapes.iter().zip(&layers).enumerate() {
            if layer.weight.shape() != (*out, *inp) || layer.bias.len() != *out {
                return Err(Error::shape(
                    format!("layer {i}: {out}x{inp} weight, {out} bias"),
                    format!(
                        "{}x{} weight, {} bias",
                        layer.weight.rows(),
                        layer.weight.cols(),
                        layer.bias.len()
                    ),
                ));
            }
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &ProbeSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.data().len() + l.bias.len()).sum()
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        self.forward_cached(batch).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols() != self.spec.input_dim {
            return Err(Error::shape(
                format!("{} input columns", self.spec.input_dim),
                format!("{} columns", batch.cols()),
            ));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = current.affine(&layer.weight, &layer.bias)?;
            if i < last {
                next.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(std::mem::replace(&mut current, next));
        }
        Ok((current, ForwardCache { inputs }))
    }

    /// Exact gradients of `Σ output_grad ⊙ forward(batch)`.
    pub fn backward(&self, batch: &Matrix, output_grad: &Matrix) -> Result<ProbeGrads> {
        let (_, cache) = self.forward_cached(batch)?;
        self.backward_cached(&cache, output_grad)
    }

    pub fn backward_cached(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<ProbeGrads> {
        let rows = cache.inputs[0].rows();
        if output_grad.shape() != (rows, self.spec.output_dim) {
            return Err(Error::shape(
                format!("{rows}x{} output gradient", self.spec.output_dim),
                format!("{}x{}", output_grad.rows(), output_grad.cols()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            grads.push(LayerGrads {
                weight: delta.transpose_matmul(input)?,
                bias: delta.column_sums(),
            });
            let mut upstream = delta.matmul(&layer.weight)?;
            if i > 0 {
                // ReLU mask: the layer input is positive exactly where the
                // previous pre-activation was.
                for (g, &a) in upstream.data_mut().iter_mut().zip(input.data()) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = upstream;
        }
        grads.reverse();
        Ok(ProbeGrads {
            layers: grads,
            input: delta,
        })
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.data_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data().len(), l.bias.len()])
            .collect()
    }
}

impl Trainable for Probe {
    type Cache = ForwardCache;

    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.forward(x)
    }

    fn forward_train(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.forward_cached(x)
    }

    fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Vec<Vec<f32>>> {
        Ok(self.backward_cached(cache, output_grad)?.into_tensors())
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        Probe::tensors_mut(self)
    }

    fn tensor_sizes(&self) -> Vec<usize> {
        Probe::tensor_sizes(self)
    }
}
