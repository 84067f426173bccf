use super::graph::{Graph, NodeId};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compares reverse-mode gradients against central differences.
///
/// `build` receives a fresh graph and one leaf per entry of `params` and must
/// return a scalar root. Returns the largest
/// `|analytic - numeric| / max(1, |numeric|)` over every parameter entry.
pub fn finite_diff_check<F>(build: F, params: &[Tensor], h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {h}")));
    }

    let eval = |values: &[Tensor], with_grad: bool| -> Result<(f64, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = values.iter().map(|t| g.param(t.clone())).collect();
        let root = build(&mut g, &ids)?;
        let y = g.value(root).item();
        if !y.is_finite() {
            return Err(Error::NonFiniteLoss(y));
        }
        let grads = if with_grad {
            g.backward(root)?;
            ids.iter().map(|&id| g.grad(id).unwrap().to_vec()).collect()
        } else {
            Vec::new()
        };
        Ok((y, grads))
    };

    let (_, analytic) = eval(params, true)?;
    let mut work: Vec<Tensor> = params.to_vec();
    let mut worst = 0.0f64;
    for (p, grads) in analytic.iter().enumerate() {
        for (i, &an) in grads.iter().enumerate() {
            let orig = params[p].data()[i];
            work[p].data_mut()[i] = orig + h;
            let (plus, _) = eval(&work, false)?;
            work[p].data_mut()[i] = orig - h;
            let (minus, _) = eval(&work, false)?;
            work[p].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let err = (an - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
