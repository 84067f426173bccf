//! Dense `f64` tensors with an eager reverse-mode tape.

mod gradcheck;
mod graph;
mod tensor;

pub use gradcheck::finite_diff_check;
pub use graph::{Graph, NodeId, Op};
pub use tensor::{glorot_bound, Fill, Tensor};

pub(crate) use tensor::uniform_vec;
