use crate::error::{Error, Result};
use crate::numerics::{probe_init, ForwardCache, Layer, Matrix, Probe, ProbeSpec, Trainable};

/// Width of the projected parameter.
pub const PARAM_EMBED_DIM: usize = 32;

/// Linear map from the scalar normalized parameter to `ℝ^32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamProjector {
    pub layer: Layer,
}

impl ParamProjector {
    pub fn init(seed: u64) -> Result<Self> {
        let probe = probe_init(&ProbeSpec::slp(1, PARAM_EMBED_DIM, seed))?;
        Ok(Self {
            layer: probe.layers()[0].clone(),
        })
    }

    /// `p` is an `n × 1` column.
    pub fn project(&self, p: &Matrix) -> Result<Matrix> {
        p.affine(&self.layer.weight, &self.layer.bias)
    }
}

/// A probe fed with `[z | g(p)]`, where `g` is a [`ParamProjector`] trained
/// jointly with it. Its input rows are `[z | p]`, `d + 1` wide.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedProbe {
    pub projector: ParamProjector,
    pub probe: Probe,
    embed_dim: usize,
}

pub struct ConditionedCache {
    param: Matrix,
    inner: ForwardCache,
}

impl ConditionedProbe {
    pub fn init(embed_dim: usize, hidden: &[usize], output_dim: usize, seed: u64) -> Result<Self> {
        let spec = ProbeSpec::mlp(embed_dim + PARAM_EMBED_DIM, hidden, output_dim, seed);
        Ok(Self {
            projector: ParamProjector::init(seed.wrapping_add(1))?,
            probe: probe_init(&spec)?,
            embed_dim,
        })
    }

    fn inner_input(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        if x.cols() != self.embed_dim + 1 {
            return Err(Error::shape(
                format!("{} input columns", self.embed_dim + 1),
                format!("{} columns", x.cols()),
            ));
        }
        let z = x.column_range(0, self.embed_dim);
        let p = x.column_range(self.embed_dim, self.embed_dim + 1);
        let joined = z.hstack(&self.projector.project(&p)?)?;
        Ok((joined, p))
    }
}

impl Trainable for ConditionedProbe {
    type Cache = ConditionedCache;

    fn input_dim(&self) -> usize {
        self.embed_dim + 1
    }

    fn output_dim(&self) -> usize {
        self.probe.spec().output_dim
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let (joined, _) = self.inner_input(x)?;
        self.probe.forward(&joined)
    }

    fn forward_train(&self, x: &Matrix) -> Result<(Matrix, ConditionedCache)> {
        let (joined, param) = self.inner_input(x)?;
        let (out, inner) = self.probe.forward_cached(&joined)?;
        Ok((out, ConditionedCache { param, inner }))
    }

    fn backward(&self, cache: &ConditionedCache, output_grad: &Matrix) -> Result<Vec<Vec<f32>>> {
        let grads = self.probe.backward_cached(&cache.inner, output_grad)?;
        let g_proj = grads.input.column_range(self.embed_dim, self.embed_dim + PARAM_EMBED_DIM);
        let mut out = vec![g_proj.transpose_matmul(&cache.param)?.into_vec(), g_proj.column_sums()];
        out.extend(grads.into_tensors());
        Ok(out)
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        let layer = &mut self.projector.layer;
        let mut out = vec![layer.weight.data_mut(), layer.bias.as_mut_slice()];
        out.extend(self.probe.tensors_mut());
        out
    }

    fn tensor_sizes(&self) -> Vec<usize> {
        let mut out = vec![PARAM_EMBED_DIM, PARAM_EMBED_DIM];
        out.extend(self.probe.tensor_sizes());
        out
    }
}
