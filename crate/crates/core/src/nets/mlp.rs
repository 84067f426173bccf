use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::{glorot_bound, uniform_vec, Graph, NodeId, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

/// What sits on top of the last dense layer.
///
/// With `SoftmaxCrossEntropy` the network emits logits and the softmax is
/// fused into the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    Linear,
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub output_head: OutputHead,
    /// Dense layers carry a bias vector. Off for the bias-free linear
    /// trainees whose loss surface is plotted in parameter space.
    pub bias: bool,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, output_head: OutputHead) -> Self {
        Self {
            layer_sizes,
            activation,
            output_head,
            bias: true,
        }
    }

    pub fn without_bias(mut self) -> Self {
        self.bias = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "an MLP needs at least two positive layer sizes, got {:?}",
                self.layer_sizes
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// `sum_i (n_i + bias) * n_{i+1}`
    pub fn param_count(&self) -> usize {
        let b = usize::from(self.bias);
        self.layer_sizes
            .windows(2)
            .map(|w| (w[0] + b) * w[1])
            .sum()
    }

    /// `(offset, shape)` of each parameter block: `W_0, b_0, W_1, ...`.
    fn blocks(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        let mut offset = 0;
        for w in self.layer_sizes.windows(2) {
            out.push((offset, vec![w[0], w[1]]));
            offset += w[0] * w[1];
            if self.bias {
                out.push((offset, vec![w[1]]));
                offset += w[1];
            }
        }
        out
    }
}

/// A flat parameter vector together with the architecture it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
}

impl ModelState {
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let params = vec![0.0; spec.param_count()];
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::ShapeError {
                op: "model_state",
                lhs: vec![spec.param_count()],
                rhs: vec![params.len()],
            });
        }
        Ok(Self { spec, params })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Pushes every parameter block onto `g` as a leaf.
    pub fn leaves(&self, g: &mut Graph, requires_grad: bool) -> Vec<NodeId> {
        self.spec
            .blocks()
            .into_iter()
            .map(|(offset, shape)| {
                let n: usize = shape.iter().product();
                let data = self.params[offset..offset + n].to_vec();
                let t = Tensor::from_parts(shape, data);
                g.leaf(t.with_requires_grad(requires_grad))
            })
            .collect()
    }

    /// Concatenates the block gradients of `ids` back into one flat vector.
    pub fn collect_grads(&self, g: &Graph, ids: &[NodeId]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.len());
        for &id in ids {
            match g.grad(id) {
                Some(gr) => out.extend_from_slice(gr),
                None => out.extend(std::iter::repeat_n(0.0, g.value(id).len())),
            }
        }
        out
    }
}

/// Glorot-uniform weights and zero biases, reproducible from `seed`.
pub fn mlp_init(spec: &MlpSpec, seed: u64) -> Result<ModelState> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.param_count());
    for w in spec.layer_sizes.windows(2) {
        let bound = glorot_bound(w[0], w[1]);
        params.extend(uniform_vec(&mut rng, w[0] * w[1], -bound, bound));
        if spec.bias {
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
    }
    Ok(ModelState {
        spec: spec.clone(),
        params,
    })
}

/// Forward pass on the tape. `x` is `[batch, input_dim]`; `leaves` come from
/// [`ModelState::leaves`].
pub fn mlp_forward_graph(
    g: &mut Graph,
    spec: &MlpSpec,
    leaves: &[NodeId],
    x: NodeId,
) -> Result<NodeId> {
    let (_, cols) = g.value(x).dims2();
    if cols != spec.input_dim() || g.value(x).shape().len() != 2 {
        return Err(Error::ShapeError {
            op: "mlp_forward",
            lhs: g.value(x).shape().to_vec(),
            rhs: vec![spec.input_dim()],
        });
    }
    let per_layer = if spec.bias { 2 } else { 1 };
    let mut h = x;
    for layer in 0..spec.num_layers() {
        let w = leaves[layer * per_layer];
        h = g.matmul(h, w)?;
        if spec.bias {
            h = g.add_bias(h, leaves[layer * per_layer + 1])?;
        }
        if layer + 1 < spec.num_layers() {
            h = match spec.activation {
                Activation::Relu => g.relu(h)?,
                Activation::Tanh => g.tanh(h)?,
            };
        }
    }
    Ok(h)
}

/// Network output for a `[batch, input_dim]` input.
pub fn mlp_forward(model: &ModelState, x: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let leaves = model.leaves(&mut g, false);
    let xi = g.constant(x.clone());
    let out = mlp_forward_graph(&mut g, &model.spec, &leaves, xi)?;
    Ok(g.value(out).clone())
}
