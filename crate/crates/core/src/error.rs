use thiserror::Error;

use crate::controller::StepRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape {0:?}: every dimension must be >= 1 and the shape non-empty")]
    InvalidShape(Vec<usize>),

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeError {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("loss is not finite ({0})")]
    NonFiniteLoss(f64),

    #[error("gradient contains non-finite entries")]
    NonFiniteGradient,

    #[error("learning-rate override is only accepted by plain sgd, not {0}")]
    UnsupportedOverride(&'static str),

    #[error("class label {label} out of range for {classes} classes")]
    LabelError { label: usize, classes: usize },

    #[error("IDX format error: {0}")]
    FormatError(String),

    #[error("requested {requested} items but only {available} are available")]
    RangeError { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at step {step} (loss {loss})")]
    Divergence {
        step: usize,
        loss: f64,
        trace: Vec<StepRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
