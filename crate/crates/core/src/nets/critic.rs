use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lstm::OUTPUT_INIT;
use super::mlp::{mlp_forward_graph, mlp_init, Activation, MlpSpec, ModelState, OutputHead};
use crate::error::{Error, Result};
use crate::ndcore::{uniform_vec, Graph, NodeId, Tensor};

pub const CRITIC_HIDDEN: usize = 10;

/// `Q(s, a)`: one tanh hidden layer over `concat(s, a)`, scalar linear output.
pub fn critic_spec(state_dim: usize) -> MlpSpec {
    MlpSpec::new(
        vec![state_dim + 1, CRITIC_HIDDEN, 1],
        Activation::Tanh,
        OutputHead::Linear,
    )
}

/// Glorot hidden layer; the output layer starts uniform in
/// `[-OUTPUT_INIT, OUTPUT_INIT]` so the untrained `Q` is nearly flat.
pub fn critic_init(state_dim: usize, seed: u64) -> Result<ModelState> {
    let mut phi = mlp_init(&critic_spec(state_dim), seed)?;
    let n = phi.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let head = uniform_vec(&mut rng, CRITIC_HIDDEN, -OUTPUT_INIT, OUTPUT_INIT);
    phi.params[n - CRITIC_HIDDEN - 1..n - 1].copy_from_slice(&head);
    Ok(phi)
}

fn check_inputs(phi: &ModelState, s: &[f64], a: f64) -> Result<()> {
    if phi.spec.input_dim() != s.len() + 1 || phi.spec.output_dim() != 1 {
        return Err(Error::ShapeError {
            op: "critic_forward",
            lhs: phi.spec.layer_sizes.clone(),
            rhs: vec![s.len() + 1],
        });
    }
    if !a.is_finite() || s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss(a));
    }
    Ok(())
}

/// Builds `Q(s, a)` on the tape with `a` as its own `[1, 1]` node.
pub fn critic_graph(
    g: &mut Graph,
    phi: &ModelState,
    phi_leaves: &[NodeId],
    s: &[f64],
    a: NodeId,
) -> Result<NodeId> {
    let s_node = g.constant(Tensor::row(s.to_vec()));
    let input = g.concat(&[s_node, a])?;
    mlp_forward_graph(g, &phi.spec, phi_leaves, input)
}

pub fn critic_forward(phi: &ModelState, s: &[f64], a: f64) -> Result<f64> {
    check_inputs(phi, s, a)?;
    let mut g = Graph::new();
    let leaves = phi.leaves(&mut g, false);
    let a_node = g.constant(Tensor::row(vec![a]));
    let q = critic_graph(&mut g, phi, &leaves, s, a_node)?;
    Ok(g.value(q).item())
}

/// Value and gradients of the critic at `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticEval {
    pub q: f64,
    pub dq_dphi: Vec<f64>,
    pub dq_da: f64,
}

pub fn critic_eval(phi: &ModelState, s: &[f64], a: f64) -> Result<CriticEval> {
    check_inputs(phi, s, a)?;
    let mut g = Graph::new();
    let leaves = phi.leaves(&mut g, true);
    let a_node = g.param(Tensor::row(vec![a]));
    let q = critic_graph(&mut g, phi, &leaves, s, a_node)?;
    g.backward(q)?;
    Ok(CriticEval {
        q: g.value(q).item(),
        dq_dphi: phi.collect_grads(&g, &leaves),
        dq_da: g.grad(a_node).unwrap()[0],
    })
}
