//! Eager tape for reverse-mode differentiation.
//!
//! Every call to [`Graph::apply`] evaluates its op immediately and appends
//! the result, so node ids are a topological order by construction and the
//! reverse pass is a single backwards sweep over the tape.
//!
//! Broadcasting is limited to a one-element operand against a tensor, plus
//! the explicit [`Op::AddBias`] row broadcast used by dense layers.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// `[m, k] x [k, n] -> [m, n]`
    MatMul,
    Add,
    Sub,
    Mul,
    Sigmoid,
    Tanh,
    Relu,
    /// Concatenation along the last axis; all inputs share their row count.
    Concat,
    Sum,
    Mean,
    Square,
    /// `[m, n] + [n]`: adds a bias row to every row.
    AddBias,
    /// Columns `start..start + len` of a `[m, n]` tensor.
    SliceCols { start: usize, len: usize },
    /// Mean softmax cross-entropy of `[m, c]` logits against `m` labels.
    SoftmaxCrossEntropy { labels: Vec<usize> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::MatMul => "matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Relu => "relu",
            Op::Concat => "concat",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::Square => "square",
            Op::AddBias => "add_bias",
            Op::SliceCols { .. } => "slice_cols",
            Op::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            Op::MatMul | Op::Add | Op::Sub | Op::Mul | Op::AddBias => Some(2),
            Op::Concat => None,
            _ => Some(1),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Option<Op>,
    inputs: Vec<NodeId>,
    value: Tensor,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf; its `requires_grad` flag is kept as given.
    pub fn leaf(&mut self, tensor: Tensor) -> NodeId {
        self.push(None, Vec::new(), tensor)
    }

    pub fn param(&mut self, tensor: Tensor) -> NodeId {
        self.leaf(tensor.with_requires_grad(true))
    }

    pub fn constant(&mut self, tensor: Tensor) -> NodeId {
        self.leaf(tensor.with_requires_grad(false))
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes[id.0].value.grad.as_deref()
    }

    pub fn inputs(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].inputs
    }

    fn push(&mut self, op: Option<Op>, inputs: Vec<NodeId>, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, inputs, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Evaluates `op` on existing nodes and appends the result.
    pub fn apply(&mut self, op: Op, inputs: &[NodeId]) -> Result<NodeId> {
        if let Some(n) = op.arity() {
            assert_eq!(inputs.len(), n, "{} takes {n} inputs", op.name());
        }
        assert!(!inputs.is_empty(), "{} needs inputs", op.name());
        let mut value = self.forward(&op, inputs)?;
        value.requires_grad = inputs.iter().any(|&i| self.nodes[i.0].value.requires_grad);
        Ok(self.push(Some(op), inputs.to_vec(), value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::MatMul, &[a, b])
    }
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Add, &[a, b])
    }
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Mul, &[a, b])
    }
    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Sigmoid, &[a])
    }
    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Tanh, &[a])
    }
    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Relu, &[a])
    }
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        self.apply(Op::Concat, parts)
    }
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Sum, &[a])
    }
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Mean, &[a])
    }
    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Square, &[a])
    }
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        self.apply(Op::AddBias, &[a, bias])
    }
    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        self.apply(Op::SliceCols { start, len }, &[a])
    }
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: Vec<usize>) -> Result<NodeId> {
        self.apply(Op::SoftmaxCrossEntropy { labels }, &[logits])
    }

    fn forward(&self, op: &Op, inputs: &[NodeId]) -> Result<Tensor> {
        let v = |k: usize| &self.nodes[inputs[k].0].value;
        let out = match op {
            Op::MatMul => {
                let (a, b) = (v(0), v(1));
                let (m, k) = matrix_dims(op, a, b)?;
                let n = b.shape()[1];
                let mut out = vec![0.0; m * n];
                matmul_into(a.data(), b.data(), &mut out, m, k, n);
                Tensor::from_parts(vec![m, n], out)
            }
            Op::Add => elementwise(op, v(0), v(1), |x, y| x + y)?,
            Op::Sub => elementwise(op, v(0), v(1), |x, y| x - y)?,
            Op::Mul => elementwise(op, v(0), v(1), |x, y| x * y)?,
            Op::Sigmoid => unary(v(0), sigmoid),
            Op::Tanh => unary(v(0), f64::tanh),
            Op::Relu => unary(v(0), |x| x.max(0.0)),
            Op::Square => unary(v(0), |x| x * x),
            Op::Sum => Tensor::scalar(v(0).data().iter().sum()),
            Op::Mean => {
                let t = v(0);
                Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64)
            }
            Op::Concat => {
                let parts: Vec<&Tensor> = (0..inputs.len()).map(v).collect();
                let rows = parts[0].dims2().0;
                for p in &parts[1..] {
                    if p.dims2().0 != rows || p.shape().len() != parts[0].shape().len() {
                        return Err(shape_err(op, parts[0], p));
                    }
                }
                let total: usize = parts.iter().map(|p| p.dims2().1).sum();
                let mut out = Vec::with_capacity(rows * total);
                for r in 0..rows {
                    for p in &parts {
                        let c = p.dims2().1;
                        out.extend_from_slice(&p.data()[r * c..(r + 1) * c]);
                    }
                }
                let shape = if parts[0].shape().len() == 1 {
                    vec![total]
                } else {
                    vec![rows, total]
                };
                Tensor::from_parts(shape, out)
            }
            Op::AddBias => {
                let (a, b) = (v(0), v(1));
                let (m, n) = a.dims2();
                if b.len() != n {
                    return Err(shape_err(op, a, b));
                }
                let mut out = a.data().to_vec();
                for row in out.chunks_mut(n) {
                    for (o, bi) in row.iter_mut().zip(b.data()) {
                        *o += bi;
                    }
                }
                Tensor::from_parts(vec![m, n], out)
            }
            Op::SliceCols { start, len } => {
                let a = v(0);
                let (m, n) = a.dims2();
                if *len == 0 || start + len > n {
                    return Err(Error::ShapeError {
                        op: "slice_cols",
                        lhs: a.shape().to_vec(),
                        rhs: vec![*start, *len],
                    });
                }
                let mut out = Vec::with_capacity(m * len);
                for r in 0..m {
                    out.extend_from_slice(&a.data()[r * n + start..r * n + start + len]);
                }
                Tensor::from_parts(vec![m, *len], out)
            }
            Op::SoftmaxCrossEntropy { labels } => {
                let a = v(0);
                let (m, c) = a.dims2();
                if labels.len() != m {
                    return Err(Error::ShapeError {
                        op: "softmax_cross_entropy",
                        lhs: a.shape().to_vec(),
                        rhs: vec![labels.len()],
                    });
                }
                if let Some(&label) = labels.iter().find(|&&l| l >= c) {
                    return Err(Error::LabelError { label, classes: c });
                }
                let mut total = 0.0;
                for (row, &label) in a.data().chunks(c).zip(labels) {
                    total += log_sum_exp(row) - row[label];
                }
                Tensor::scalar(total / m as f64)
            }
        };
        Ok(out)
    }

    /// Reverse sweep from a scalar `root`.
    ///
    /// Afterwards every node with `requires_grad` carries `d root / d node`
    /// in its `grad`; nodes the root does not depend on get zeros.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        let root_value = &self.nodes[root.0].value;
        if !root_value.is_scalar() {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if let Some(op) = &node.op {
                for (slot, contribution) in self.local_grads(op, &node.inputs, &node.value, &upstream)
                {
                    let input = node.inputs[slot];
                    if !self.nodes[input.0].value.requires_grad {
                        continue;
                    }
                    match &mut grads[input.0] {
                        Some(acc) => {
                            for (a, c) in acc.iter_mut().zip(&contribution) {
                                *a += c;
                            }
                        }
                        empty => *empty = Some(contribution),
                    }
                }
            }
            // Keep the finished gradient for this node.
            grads[idx] = Some(upstream);
        }

        for (node, grad) in self.nodes.iter_mut().zip(grads) {
            if node.value.requires_grad {
                let n = node.value.len();
                node.value.grad = Some(grad.unwrap_or_else(|| vec![0.0; n]));
            } else {
                node.value.grad = None;
            }
        }
        Ok(())
    }

    /// Gradient contributions `(input slot, d root / d input)` for one node.
    fn local_grads(
        &self,
        op: &Op,
        inputs: &[NodeId],
        out: &Tensor,
        up: &[f64],
    ) -> Vec<(usize, Vec<f64>)> {
        let v = |k: usize| &self.nodes[inputs[k].0].value;
        let wants = |k: usize| v(k).requires_grad;
        let mut res = Vec::with_capacity(inputs.len());
        match op {
            Op::MatMul => {
                let (a, b) = (v(0), v(1));
                let (m, k) = a.dims2();
                let n = b.shape()[1];
                if wants(0) {
                    // dA = dC . B^T
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        let dc = &up[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &b.data()[p * n..(p + 1) * n];
                            da[i * k + p] = dot(dc, brow);
                        }
                    }
                    res.push((0, da));
                }
                if wants(1) {
                    // dB = A^T . dC
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let dc = &up[i * n..(i + 1) * n];
                        for p in 0..k {
                            let x = a.data()[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            axpy(x, dc, &mut db[p * n..(p + 1) * n]);
                        }
                    }
                    res.push((1, db));
                }
            }
            Op::Add | Op::Sub | Op::Mul => {
                for slot in 0..2 {
                    if !wants(slot) {
                        continue;
                    }
                    let this = v(slot);
                    let other = v(1 - slot);
                    let full: Vec<f64> = match op {
                        Op::Add => up.to_vec(),
                        Op::Sub if slot == 0 => up.to_vec(),
                        Op::Sub => up.iter().map(|g| -g).collect(),
                        _ => up
                            .iter()
                            .enumerate()
                            .map(|(i, g)| g * broadcast_at(other, i))
                            .collect(),
                    };
                    let g = if this.len() == 1 && out.len() != 1 {
                        vec![full.iter().sum()]
                    } else {
                        full
                    };
                    res.push((slot, g));
                }
            }
            Op::Sigmoid => res.push((
                0,
                zip_map(up, out.data(), |g, y| g * y * (1.0 - y)),
            )),
            Op::Tanh => res.push((0, zip_map(up, out.data(), |g, y| g * (1.0 - y * y)))),
            Op::Relu => res.push((
                0,
                zip_map(up, v(0).data(), |g, x| if x > 0.0 { g } else { 0.0 }),
            )),
            Op::Square => res.push((0, zip_map(up, v(0).data(), |g, x| 2.0 * x * g))),
            Op::Sum => res.push((0, vec![up[0]; v(0).len()])),
            Op::Mean => {
                let n = v(0).len();
                res.push((0, vec![up[0] / n as f64; n]));
            }
            Op::Concat => {
                let rows = out.dims2().0;
                let total = out.dims2().1;
                let mut offset = 0;
                for slot in 0..inputs.len() {
                    let c = v(slot).dims2().1;
                    if wants(slot) {
                        let mut g = Vec::with_capacity(rows * c);
                        for r in 0..rows {
                            g.extend_from_slice(&up[r * total + offset..r * total + offset + c]);
                        }
                        res.push((slot, g));
                    }
                    offset += c;
                }
            }
            Op::AddBias => {
                if wants(0) {
                    res.push((0, up.to_vec()));
                }
                if wants(1) {
                    let n = v(1).len();
                    let mut gb = vec![0.0; n];
                    for row in up.chunks(n) {
                        for (g, u) in gb.iter_mut().zip(row) {
                            *g += u;
                        }
                    }
                    res.push((1, gb));
                }
            }
            Op::SliceCols { start, len } => {
                let (m, n) = v(0).dims2();
                let mut g = vec![0.0; m * n];
                for r in 0..m {
                    g[r * n + start..r * n + start + len]
                        .copy_from_slice(&up[r * len..(r + 1) * len]);
                }
                res.push((0, g));
            }
            Op::SoftmaxCrossEntropy { labels } => {
                let a = v(0);
                let (m, c) = a.dims2();
                let scale = up[0] / m as f64;
                let mut g = Vec::with_capacity(m * c);
                for (row, &label) in a.data().chunks(c).zip(labels) {
                    let lse = log_sum_exp(row);
                    for (j, &z) in row.iter().enumerate() {
                        let p = (z - lse).exp();
                        let target = if j == label { 1.0 } else { 0.0 };
                        g.push(scale * (p - target));
                    }
                }
                res.push((0, g));
            }
        }
        res
    }
}

fn shape_err(op: &Op, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeError {
        op: op.name(),
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn matrix_dims(op: &Op, a: &Tensor, b: &Tensor) -> Result<(usize, usize)> {
    match (a.shape(), b.shape()) {
        ([m, k], [k2, _]) if k == k2 => Ok((*m, *k)),
        _ => Err(shape_err(op, a, b)),
    }
}

fn elementwise(op: &Op, a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor::from_parts(a.shape().to_vec(), data))
    } else if b.len() == 1 {
        let y = b.item();
        Ok(Tensor::from_parts(
            a.shape().to_vec(),
            a.data().iter().map(|&x| f(x, y)).collect(),
        ))
    } else if a.len() == 1 {
        let x = a.item();
        Ok(Tensor::from_parts(
            b.shape().to_vec(),
            b.data().iter().map(|&y| f(x, y)).collect(),
        ))
    } else {
        Err(shape_err(op, a, b))
    }
}

fn broadcast_at(t: &Tensor, i: usize) -> f64 {
    if t.len() == 1 {
        t.item()
    } else {
        t.data()[i]
    }
}

fn unary(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(a.shape().to_vec(), a.data().iter().map(|&x| f(x)).collect())
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out += a . b` for row-major `a: [m, k]`, `b: [k, n]`.
///
/// Zero entries of `a` are skipped, which pays off on sparse inputs such as
/// MNIST pixels.
fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            axpy(x, &b[p * n..(p + 1) * n], row);
        }
    }
}
