//! Baseline first-order optimizers and the plain SGD step the controller drives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::ModelState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Momentum,
    Adagrad,
    Rmsprop,
    Adadelta,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::Sgd,
        OptimizerKind::Momentum,
        OptimizerKind::Adagrad,
        OptimizerKind::Rmsprop,
        OptimizerKind::Adadelta,
        OptimizerKind::Adam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::Rmsprop => "rmsprop",
            OptimizerKind::Adadelta => "adadelta",
            OptimizerKind::Adam => "adam",
        }
    }

    fn slot_count(self) -> usize {
        match self {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Momentum | OptimizerKind::Adagrad | OptimizerKind::Rmsprop => 1,
            OptimizerKind::Adadelta | OptimizerKind::Adam => 2,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer {s:?}")))
    }
}

/// Named hyperparameters. Unused ones are ignored by a given kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lr: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Hyper {
    /// Toolbox defaults for `kind` at learning rate `lr`.
    pub fn defaults(kind: OptimizerKind, lr: f64) -> Self {
        let (rho, eps) = match kind {
            OptimizerKind::Adadelta => (0.95, 1e-6),
            _ => (0.9, 1e-8),
        };
        Self {
            lr,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            rho,
            eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub hyper: Hyper,
    /// Auxiliary per-parameter vectors: velocity (momentum), squared-gradient
    /// accumulator (adagrad, rmsprop), `[E[g^2], E[dx^2]]` (adadelta) or
    /// `[m, v]` (adam).
    pub slots: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        Self::with_hyper(kind, Hyper::defaults(kind, lr), n_params)
    }

    pub fn with_hyper(kind: OptimizerKind, hyper: Hyper, n_params: usize) -> Self {
        Self {
            kind,
            hyper,
            slots: vec![vec![0.0; n_params]; kind.slot_count()],
            step_count: 0,
        }
    }

    /// Applies one update to `params` in place.
    ///
    /// `lr_override` replaces the learning rate for this step and is accepted
    /// only by plain SGD, where it yields exactly `w <- w - lr * g`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr_override: Option<f64>) -> Result<()> {
        if grad.len() != params.len() {
            return Err(Error::ShapeError {
                op: "optimizer_step",
                lhs: vec![params.len()],
                rhs: vec![grad.len()],
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        if lr_override.is_some() && self.kind != OptimizerKind::Sgd {
            return Err(Error::UnsupportedOverride(self.kind.name()));
        }
        if self.slots.iter().any(|s| s.len() != params.len()) {
            return Err(Error::ShapeError {
                op: "optimizer_slots",
                lhs: vec![self.slots[0].len()],
                rhs: vec![params.len()],
            });
        }

        let h = self.hyper;
        self.step_count += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = lr_override.unwrap_or(h.lr);
                for (w, g) in params.iter_mut().zip(grad) {
                    *w -= lr * g;
                }
            }
            OptimizerKind::Momentum => {
                let v = &mut self.slots[0];
                for ((w, g), v) in params.iter_mut().zip(grad).zip(v.iter_mut()) {
                    *v = h.momentum * *v + g;
                    *w -= h.lr * *v;
                }
            }
            OptimizerKind::Adagrad => {
                let acc = &mut self.slots[0];
                for ((w, g), a) in params.iter_mut().zip(grad).zip(acc.iter_mut()) {
                    *a += g * g;
                    *w -= h.lr * g / (a.sqrt() + h.eps);
                }
            }
            OptimizerKind::Rmsprop => {
                let ms = &mut self.slots[0];
                for ((w, g), m) in params.iter_mut().zip(grad).zip(ms.iter_mut()) {
                    *m = h.rho * *m + (1.0 - h.rho) * g * g;
                    *w -= h.lr * g / (m.sqrt() + h.eps);
                }
            }
            OptimizerKind::Adadelta => {
                let (acc_g, acc_dx) = split_two(&mut self.slots);
                for (((w, g), ag), ax) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(acc_g.iter_mut())
                    .zip(acc_dx.iter_mut())
                {
                    *ag = h.rho * *ag + (1.0 - h.rho) * g * g;
                    let update = g * (*ax + h.eps).sqrt() / (*ag + h.eps).sqrt();
                    *ax = h.rho * *ax + (1.0 - h.rho) * update * update;
                    *w -= h.lr * update;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step_count as i32;
                let c1 = 1.0 - h.beta1.powi(t);
                let c2 = 1.0 - h.beta2.powi(t);
                let (m, v) = split_two(&mut self.slots);
                for (((w, g), m), v) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = h.beta1 * *m + (1.0 - h.beta1) * g;
                    *v = h.beta2 * *v + (1.0 - h.beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *w -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
                }
            }
        }
        Ok(())
    }
}

fn split_two(slots: &mut [Vec<f64>]) -> (&mut Vec<f64>, &mut Vec<f64>) {
    let (a, b) = slots.split_at_mut(1);
    (&mut a[0], &mut b[0])
}

pub fn optimizer_step(
    state: &mut OptimizerState,
    omega: &mut ModelState,
    grad: &[f64],
    lr_override: Option<f64>,
) -> Result<()> {
    state.step(&mut omega.params, grad, lr_override)
}

/// Fixed learning rates tried for every baseline: `1e-4, 1e-3, ..., 1e0`.
pub fn lr_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1, 1e0]
}
