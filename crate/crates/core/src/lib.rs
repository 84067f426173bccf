//! Learning-rate control for SGD with an actor-critic learner.
//!
//! An LSTM actor reads the trainee's mini-batch loss and proposes the next
//! learning rate; a small critic estimates the discounted loss decrement of
//! that choice and is trained by TD(0). Six hand-written optimizers serve as
//! baselines.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod ndcore;
pub mod nets;
pub mod optim;
pub mod tasks;
pub mod trainee;

pub use error::{Error, Result};
