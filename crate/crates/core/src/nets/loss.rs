use serde::{Deserialize, Serialize};

use super::mlp::{mlp_forward_graph, ModelState, OutputHead};
use crate::error::{Error, Result};
use crate::ndcore::{Graph, NodeId, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    SoftmaxCrossEntropy,
}

impl From<OutputHead> for LossKind {
    fn from(head: OutputHead) -> Self {
        match head {
            OutputHead::Linear => LossKind::Mse,
            OutputHead::SoftmaxCrossEntropy => LossKind::SoftmaxCrossEntropy,
        }
    }
}

/// Supervision for a batch: real-valued rows or class indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Tensor),
    Class(Vec<usize>),
}

/// Batch-mean loss as a scalar node.
pub fn loss_eval(g: &mut Graph, kind: LossKind, pred: NodeId, target: &Targets) -> Result<NodeId> {
    match (kind, target) {
        (LossKind::Mse, Targets::Real(t)) => {
            if t.dims2() != g.value(pred).dims2() {
                return Err(Error::ShapeError {
                    op: "mse",
                    lhs: g.value(pred).shape().to_vec(),
                    rhs: t.shape().to_vec(),
                });
            }
            let y = g.constant(t.clone());
            let diff = g.sub(pred, y)?;
            let sq = g.square(diff)?;
            g.mean(sq)
        }
        (LossKind::SoftmaxCrossEntropy, Targets::Class(labels)) => {
            g.softmax_cross_entropy(pred, labels.clone())
        }
        (kind, _) => Err(Error::Config(format!(
            "{kind:?} loss does not accept these targets"
        ))),
    }
}

fn build_loss(
    g: &mut Graph,
    model: &ModelState,
    kind: LossKind,
    x: &Tensor,
    y: &Targets,
    requires_grad: bool,
) -> Result<(NodeId, Vec<NodeId>)> {
    let leaves = model.leaves(g, requires_grad);
    let xi = g.constant(x.clone());
    let pred = mlp_forward_graph(g, &model.spec, &leaves, xi)?;
    let loss = loss_eval(g, kind, pred, y)?;
    Ok((loss, leaves))
}

/// Batch-mean loss of `model` on `(x, y)`.
pub fn batch_loss(model: &ModelState, kind: LossKind, x: &Tensor, y: &Targets) -> Result<f64> {
    let mut g = Graph::new();
    let (loss, _) = build_loss(&mut g, model, kind, x, y, false)?;
    Ok(g.value(loss).item())
}

/// Batch-mean loss and its gradient with respect to the flat parameters.
pub fn loss_and_grad(
    model: &ModelState,
    kind: LossKind,
    x: &Tensor,
    y: &Targets,
) -> Result<(f64, Vec<f64>)> {
    let mut g = Graph::new();
    let (loss, leaves) = build_loss(&mut g, model, kind, x, y, true)?;
    g.backward(loss)?;
    Ok((g.value(loss).item(), model.collect_grads(&g, &leaves)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::{finite_diff_check, Fill};

    #[test]
    fn mse_of_exact_prediction_is_zero() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::from_vec(&[1, 1], vec![2.0]).unwrap());
        let t = Targets::Real(Tensor::from_vec(&[1, 1], vec![2.0]).unwrap());
        let l = loss_eval(&mut g, LossKind::Mse, p, &t).unwrap();
        assert_eq!(g.value(l).item(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::new(&[3, 10], Fill::Constant(0.0)).unwrap());
        let l = loss_eval(
            &mut g,
            LossKind::SoftmaxCrossEntropy,
            p,
            &Targets::Class(vec![0, 5, 9]),
        )
        .unwrap();
        assert!((g.value(l).item() - std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_label_out_of_range() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::new(&[1, 10], Fill::Constant(0.0)).unwrap());
        let err = loss_eval(
            &mut g,
            LossKind::SoftmaxCrossEntropy,
            p,
            &Targets::Class(vec![12]),
        );
        assert!(matches!(err, Err(Error::LabelError { label: 12, .. })));
    }

    #[test]
    fn mismatched_target_kind() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::new(&[1, 2], Fill::Constant(0.0)).unwrap());
        assert!(loss_eval(&mut g, LossKind::Mse, p, &Targets::Class(vec![0])).is_err());
    }

    #[test]
    fn mse_gradcheck_random_batch() {
        let pred = Tensor::new(&[5, 2], Fill::Uniform { lo: -2.0, hi: 2.0, seed: 1 }).unwrap();
        let target = Targets::Real(
            Tensor::new(&[5, 2], Fill::Uniform { lo: -2.0, hi: 2.0, seed: 2 }).unwrap(),
        );
        let err = finite_diff_check(
            |g, p| loss_eval(g, LossKind::Mse, p[0], &target),
            &[pred],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn cross_entropy_gradcheck() {
        let logits = Tensor::new(&[4, 3], Fill::Uniform { lo: -3.0, hi: 3.0, seed: 4 }).unwrap();
        let labels = Targets::Class(vec![0, 2, 1, 2]);
        let err = finite_diff_check(
            |g, p| loss_eval(g, LossKind::SoftmaxCrossEntropy, p[0], &labels),
            &[logits],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }
}
