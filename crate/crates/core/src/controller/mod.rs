//! Actor-critic learning-rate controller.
//!
//! The actor is a stacked LSTM that reads the trainee's mini-batch loss and
//! emits a raw scalar, squashed into a learning rate inside `lr_bounds`. The
//! critic `Q(s, a)` estimates the discounted sum of future one-step loss
//! decrements and is trained by TD(0); the actor follows the deterministic
//! policy gradient `grad_theta pi(s) * dQ/da`.
//!
//! Both networks accumulate per-step gradients and apply their average with
//! Adam every `m_phi` / `m_theta` contributions.

mod train;

use serde::{Deserialize, Serialize};

pub use train::{evaluate_policy, train_controller, train_controller_from, TrainOutcome};

use crate::error::{Error, Result};
use crate::ndcore::{Graph, Tensor};
use crate::nets::{
    critic_eval, critic_forward, critic_init, lstm_init, lstm_step, lstm_step_graph, LstmParams,
    LstmSpec, LstmState, ModelState,
};
use crate::optim::{Hyper, OptimizerKind, OptimizerState};

/// One iteration of a training or evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    /// Controller state: mean trainee loss on `x_i` before the update.
    pub s: f64,
    /// Learning rate applied at this step.
    pub a: f64,
    /// `f_before - f_after`, both measured on `x_i`.
    pub r: f64,
    /// TD error, when a critic is being trained.
    pub delta: Option<f64>,
    pub f_before: f64,
    pub f_after: f64,
    /// Distance between the `x_i` gradient and the full training gradient.
    pub disagreement: Option<f64>,
    /// Test-split loss of the updated model, when evaluated this step.
    pub test_loss: Option<f64>,
    /// Indices of the trainee/critic sample.
    pub sample_i: Vec<usize>,
    /// Indices of the actor sample (empty when no actor is trained).
    pub sample_j: Vec<usize>,
    /// Trainee parameters after the update, when recorded.
    pub params: Option<Vec<f64>>,
    /// The trainee was reset to `omega_0` after this step.
    pub reset: bool,
}

/// Log-uniform squashing of the actor's raw output into `(lo, hi)`:
/// `a = 10^(c + w * tanh(raw))` with `c, w` the midpoint and half-width of
/// `[log10 lo, log10 hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionMap {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ActionMap {
    fn default() -> Self {
        Self { lo: 1e-4, hi: 1.0 }
    }
}

impl ActionMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!("invalid learning-rate bounds ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    fn center_and_width(&self) -> (f64, f64) {
        let (l, h) = (self.lo.log10(), self.hi.log10());
        ((l + h) / 2.0, (h - l) / 2.0)
    }

    pub fn apply(&self, raw: f64) -> f64 {
        let (c, w) = self.center_and_width();
        10f64.powf(c + w * raw.tanh())
    }

    /// Position of `a` on the squashed scale, `(log10 a - c) / w`, in `(-1, 1)`.
    pub fn normalize(&self, a: f64) -> f64 {
        let (c, w) = self.center_and_width();
        (a.log10() - c) / w
    }

    /// `da / draw`.
    pub fn derivative(&self, raw: f64) -> f64 {
        let (_, w) = self.center_and_width();
        let t = raw.tanh();
        self.apply(raw) * std::f64::consts::LN_10 * w * (1.0 - t * t)
    }
}

/// `delta = r + gamma * q_next - q_curr`.
pub fn td_error(r: f64, q_next: f64, q_curr: f64, gamma: f64) -> f64 {
    r + gamma * q_next - q_curr
}

/// Sum of `values` correctly rounded from the exact real sum.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    // Shewchuk's non-overlapping partials.
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for k in 0..partials.len() {
            let mut y = partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    // Round the expansion to nearest, including the half-way correction.
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub gamma: f64,
    pub m_theta: usize,
    pub m_phi: usize,
    /// Trainee reset period `e` during controller training.
    pub reset_every: usize,
    pub action: ActionMap,
    /// Clip TD errors to `[-c, c]` before the critic gradient.
    pub td_clip: Option<f64>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub lstm: LstmSpec,
    /// Standard deviation of Gaussian noise added to the actor's raw output
    /// for the action taken during training (the behaviour policy). Without
    /// it the critic only ever sees the actor's own actions and cannot learn
    /// `dQ/da`; `0` acts greedily.
    pub exploration: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            m_theta: 10,
            m_phi: 10,
            reset_every: usize::MAX,
            action: ActionMap::default(),
            td_clip: Some(10.0),
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            lstm: LstmSpec::default(),
            exploration: 0.5,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if self.m_theta == 0 || self.m_phi == 0 || self.reset_every == 0 {
            return Err(Error::Config("m_theta, m_phi and reset_every must be positive".into()));
        }
        ActionMap::new(self.action.lo, self.action.hi)?;
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return Err(Error::Config("exploration must be finite and non-negative".into()));
        }
        if self.td_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("td clip must be positive".into()));
        }
        self.lstm.validate()
    }
}

/// A frozen or trainable actor: LSTM weights, its running state and the
/// action squashing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub theta: LstmParams,
    pub state: LstmState,
    pub map: ActionMap,
}

impl Actor {
    pub fn new(theta: LstmParams, map: ActionMap) -> Self {
        let state = LstmState::zeros(&theta.spec);
        Self { theta, state, map }
    }

    /// Feeds `s`, advances the running state and returns `(a, raw)`.
    pub fn act(&mut self, s: f64) -> Result<(f64, f64)> {
        let (raw, next) = lstm_step(&self.theta, &self.state, &[s])?;
        self.state = next;
        Ok((self.map.apply(raw), raw))
    }

    /// `(a, raw)` for `s` from a copy of the running state, which is left
    /// untouched.
    pub fn peek(&self, s: f64) -> Result<(f64, f64)> {
        let (raw, _) = lstm_step(&self.theta, &self.state, &[s])?;
        Ok((self.map.apply(raw), raw))
    }

    /// `(raw, d raw / d theta)` at `s` from a detached copy of the state.
    pub fn raw_and_grad(&self, s: f64) -> Result<(f64, Vec<f64>)> {
        let mut g = Graph::new();
        let leaves = self.theta.leaves(&mut g, true);
        let state = self.state.leaves(&mut g);
        let x = g.constant(Tensor::row(vec![s]));
        let (raw, _) = lstm_step_graph(&mut g, &self.theta.spec, &leaves, &state, x)?;
        g.backward(raw)?;
        Ok((g.value(raw).item(), self.theta.collect_grads(&g, &leaves)))
    }

    pub fn reset(&mut self) {
        self.state.reset();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub config: ControllerConfig,
    pub actor: Actor,
    pub phi: ModelState,
    pub theta_accum: Vec<f64>,
    pub phi_accum: Vec<f64>,
    theta_pending: usize,
    phi_pending: usize,
    pub actor_opt: OptimizerState,
    pub critic_opt: OptimizerState,
}

impl ControllerState {
    pub fn new(config: ControllerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let theta = lstm_init(config.lstm, seed)?;
        let phi = critic_init(config.lstm.input_dim, seed.wrapping_add(0x9e37_79b9))?;
        Ok(Self::from_parts(config, theta, phi))
    }

    pub fn from_parts(config: ControllerConfig, theta: LstmParams, phi: ModelState) -> Self {
        let adam = |lr: f64, n: usize| {
            OptimizerState::with_hyper(OptimizerKind::Adam, Hyper::defaults(OptimizerKind::Adam, lr), n)
        };
        Self {
            actor_opt: adam(config.actor_lr, theta.len()),
            critic_opt: adam(config.critic_lr, phi.len()),
            theta_accum: vec![0.0; theta.len()],
            phi_accum: vec![0.0; phi.len()],
            theta_pending: 0,
            phi_pending: 0,
            actor: Actor::new(theta, config.action),
            phi,
            config,
        }
    }

    pub fn theta(&self) -> &LstmParams {
        &self.actor.theta
    }

    pub fn actor_act(&mut self, s: f64) -> Result<(f64, f64)> {
        if !s.is_finite() {
            return Err(Error::NonFiniteLoss(s));
        }
        self.actor.act(s)
    }

    pub fn critic_q(&self, s: f64, a: f64) -> Result<f64> {
        critic_forward(&self.phi, &[s], self.config.action.normalize(a))
    }

    /// Adds `delta * grad_phi Q(s, a)`; every `m_phi` contributions the
    /// average is applied as an ascent step and the buffer is cleared.
    /// Returns whether an update was applied.
    pub fn critic_accumulate(&mut self, delta: f64, s: f64, a: f64) -> Result<bool> {
        if !delta.is_finite() {
            return Err(Error::NonFiniteLoss(delta));
        }
        let ev = critic_eval(&self.phi, &[s], self.config.action.normalize(a))?;
        for (acc, g) in self.phi_accum.iter_mut().zip(&ev.dq_dphi) {
            *acc += delta * g;
        }
        self.phi_pending += 1;
        if self.phi_pending < self.config.m_phi {
            return Ok(false);
        }
        let m = self.phi_pending as f64;
        let descent: Vec<f64> = self.phi_accum.iter().map(|g| -g / m).collect();
        self.critic_opt.step(&mut self.phi.params, &descent, None)?;
        self.phi_accum.fill(0.0);
        self.phi_pending = 0;
        Ok(true)
    }

    /// Deterministic policy gradient at `s_j`: adds
    /// `grad_theta pi(s_j) * dQ(s_j, a)/da` at `a = pi(s_j)`, evaluated on a
    /// detached copy of the actor state. Every `m_theta` contributions the
    /// average is applied as an ascent step on `Q`.
    pub fn actor_accumulate(&mut self, s_j: f64) -> Result<bool> {
        let contribution = self.actor_gradient(s_j)?;
        for (acc, g) in self.theta_accum.iter_mut().zip(&contribution) {
            *acc += g;
        }
        self.theta_pending += 1;
        if self.theta_pending < self.config.m_theta {
            return Ok(false);
        }
        let m = self.theta_pending as f64;
        let descent: Vec<f64> = self.theta_accum.iter().map(|g| -g / m).collect();
        self.actor_opt.step(&mut self.actor.theta.params, &descent, None)?;
        self.theta_accum.fill(0.0);
        self.theta_pending = 0;
        Ok(true)
    }

    /// `grad_theta Q(s, pi_theta(s))` with the critic held fixed.
    pub fn actor_gradient(&self, s: f64) -> Result<Vec<f64>> {
        if !s.is_finite() {
            return Err(Error::NonFiniteLoss(s));
        }
        let (raw, draw_dtheta) = self.actor.raw_and_grad(s)?;
        let u = raw.tanh();
        let dq_du = critic_eval(&self.phi, &[s], u)?.dq_da;
        let scale = dq_du * (1.0 - u * u);
        Ok(draw_dtheta.into_iter().map(|g| g * scale).collect())
    }

    /// Zeroes the actor's running state (episode boundary).
    pub fn reset_episode(&mut self) {
        self.actor.reset();
    }

    pub fn pending(&self) -> (usize, usize) {
        (self.theta_pending, self.phi_pending)
    }
}
