use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::{glorot_bound, uniform_vec, Graph, NodeId, Tensor};

/// Stacked LSTM with a linear scalar head on the top layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
}

impl Default for LstmSpec {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden_dim: 20,
            num_layers: 2,
        }
    }
}

impl LstmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.num_layers == 0 {
            return Err(Error::Config(format!("invalid LSTM spec {self:?}")));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        }
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden_dim;
        let layers: usize = (0..self.num_layers)
            .map(|l| (self.layer_input(l) + h) * 4 * h + 4 * h)
            .sum();
        layers + h + 1
    }
}

/// Per-layer hidden and cell vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl LstmState {
    pub fn zeros(spec: &LstmSpec) -> Self {
        Self {
            h: vec![vec![0.0; spec.hidden_dim]; spec.num_layers],
            c: vec![vec![0.0; spec.hidden_dim]; spec.num_layers],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().chain(&self.c).flatten().all(|&v| v == 0.0)
    }

    pub fn reset(&mut self) {
        for v in self.h.iter_mut().chain(self.c.iter_mut()) {
            v.fill(0.0);
        }
    }

    /// Places the state on `g` as constant leaves (no gradient flows into it).
    pub fn leaves(&self, g: &mut Graph) -> Vec<(NodeId, NodeId)> {
        self.h
            .iter()
            .zip(&self.c)
            .map(|(h, c)| {
                (
                    g.constant(Tensor::row(h.clone())),
                    g.constant(Tensor::row(c.clone())),
                )
            })
            .collect()
    }

    pub fn from_graph(g: &Graph, nodes: &[(NodeId, NodeId)]) -> Self {
        Self {
            h: nodes.iter().map(|&(h, _)| g.value(h).data().to_vec()).collect(),
            c: nodes.iter().map(|&(_, c)| g.value(c).data().to_vec()).collect(),
        }
    }
}

/// Flat LSTM parameters. Per layer: `W: [in + hidden, 4 hidden]` then
/// `b: [4 hidden]` with gate blocks ordered input, forget, candidate,
/// output; finally the head `[hidden, 1]` and its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub spec: LstmSpec,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmLeaves {
    layers: Vec<(NodeId, NodeId)>,
    head_w: NodeId,
    head_b: NodeId,
}

impl LstmLeaves {
    fn all(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.layers
            .iter()
            .flat_map(|&(w, b)| [w, b])
            .chain([self.head_w, self.head_b])
    }
}

impl LstmParams {
    pub fn zeros(spec: LstmSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            params: vec![0.0; spec.param_count()],
        })
    }

    pub fn from_params(spec: LstmSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::ShapeError {
                op: "lstm_params",
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

    /// Index of the head bias inside `params`.
    pub fn head_bias_index(&self) -> usize {
        self.params.len() - 1
    }

    pub fn leaves(&self, g: &mut Graph, requires_grad: bool) -> LstmLeaves {
        let h = self.spec.hidden_dim;
        let mut offset = 0;
        let mut take = |g: &mut Graph, shape: &[usize]| {
            let n: usize = shape.iter().product();
            let t = Tensor::from_parts(shape.to_vec(), self.params[offset..offset + n].to_vec());
            offset += n;
            g.leaf(t.with_requires_grad(requires_grad))
        };
        let layers = (0..self.spec.num_layers)
            .map(|l| {
                let w = take(g, &[self.spec.layer_input(l) + h, 4 * h]);
                let b = take(g, &[4 * h]);
                (w, b)
            })
            .collect();
        let head_w = take(g, &[h, 1]);
        let head_b = take(g, &[1]);
        LstmLeaves {
            layers,
            head_w,
            head_b,
        }
    }

    pub fn collect_grads(&self, g: &Graph, leaves: &LstmLeaves) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.len());
        for id in leaves.all() {
            match g.grad(id) {
                Some(gr) => out.extend_from_slice(gr),
                None => out.extend(std::iter::repeat_n(0.0, g.value(id).len())),
            }
        }
        out
    }
}

pub const OUTPUT_INIT: f64 = 3e-3;

/// Glorot-uniform gate weights with forget-gate biases at 1.0 and the rest
/// at 0; the linear head starts uniform in `[-OUTPUT_INIT, OUTPUT_INIT]` so
/// the untrained output is close to zero.
pub fn lstm_init(spec: LstmSpec, seed: u64) -> Result<LstmParams> {
    spec.validate()?;
    let h = spec.hidden_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.param_count());
    for l in 0..spec.num_layers {
        let fan_in = spec.layer_input(l) + h;
        let bound = glorot_bound(fan_in, 4 * h);
        params.extend(uniform_vec(&mut rng, fan_in * 4 * h, -bound, bound));
        let mut bias = vec![0.0; 4 * h];
        bias[h..2 * h].fill(1.0);
        params.extend(bias);
    }
    params.extend(uniform_vec(&mut rng, h, -OUTPUT_INIT, OUTPUT_INIT));
    params.push(0.0);
    Ok(LstmParams { spec, params })
}

/// One time step on the tape. `x` is `[1, input_dim]`; `state` holds one
/// `([1, hidden], [1, hidden])` pair per layer. Returns the scalar head
/// output and the successor state nodes.
pub fn lstm_step_graph(
    g: &mut Graph,
    spec: &LstmSpec,
    leaves: &LstmLeaves,
    state: &[(NodeId, NodeId)],
    x: NodeId,
) -> Result<(NodeId, Vec<(NodeId, NodeId)>)> {
    if g.value(x).len() != spec.input_dim {
        return Err(Error::ShapeError {
            op: "lstm_step",
            lhs: g.value(x).shape().to_vec(),
            rhs: vec![spec.input_dim],
        });
    }
    let hd = spec.hidden_dim;
    let mut input = x;
    let mut next = Vec::with_capacity(spec.num_layers);
    for (l, &(w, b)) in leaves.layers.iter().enumerate() {
        let (h_prev, c_prev) = state[l];
        let xh = g.concat(&[input, h_prev])?;
        let z = g.matmul(xh, w)?;
        let z = g.add_bias(z, b)?;
        let i_pre = g.slice_cols(z, 0, hd)?;
        let f_pre = g.slice_cols(z, hd, hd)?;
        let g_pre = g.slice_cols(z, 2 * hd, hd)?;
        let o_pre = g.slice_cols(z, 3 * hd, hd)?;
        let i = g.sigmoid(i_pre)?;
        let f = g.sigmoid(f_pre)?;
        let cand = g.tanh(g_pre)?;
        let o = g.sigmoid(o_pre)?;
        let keep = g.mul(f, c_prev)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let c_act = g.tanh(c)?;
        let h = g.mul(o, c_act)?;
        next.push((h, c));
        input = h;
    }
    let y = g.matmul(input, leaves.head_w)?;
    let y = g.add_bias(y, leaves.head_b)?;
    Ok((y, next))
}

/// Pure transition: returns the head output and the successor state,
/// leaving `state` untouched.
pub fn lstm_step(params: &LstmParams, state: &LstmState, x: &[f64]) -> Result<(f64, LstmState)> {
    let mut g = Graph::new();
    let leaves = params.leaves(&mut g, false);
    let nodes = state.leaves(&mut g);
    let xi = g.constant(Tensor::row(x.to_vec()));
    let (y, next) = lstm_step_graph(&mut g, &params.spec, &leaves, &nodes, xi)?;
    Ok((g.value(y).item(), LstmState::from_graph(&g, &next)))
}
