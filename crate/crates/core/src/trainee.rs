//! The inner training loop shared by baseline optimizers and frozen actors.

use crate::controller::StepRecord;
use crate::error::{Error, Result};
use crate::nets::{batch_loss, loss_and_grad, mlp_init, LossKind, MlpSpec, ModelState};
use crate::optim::{OptimizerKind, OptimizerState};
use crate::tasks::{Batch, BatchSampler, Task, DEFAULT_BATCH_SIZE};

/// Losses above this (or non-finite) abort a run.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Evaluate the test split every this many steps; the last step is
    /// always evaluated. `0` disables test evaluation.
    pub eval_every: usize,
    pub record_disagreement: bool,
    /// Keep `omega` after every step (for parameter-space plots).
    pub record_params: bool,
    pub trainee: Option<MlpSpec>,
}

impl RunSettings {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            eval_every: 1,
            record_disagreement: false,
            record_params: false,
            trainee: None,
        }
    }

    pub fn trainee_spec(&self, task: &Task) -> MlpSpec {
        self.trainee.clone().unwrap_or_else(|| task.default_trainee())
    }

    pub fn wants_test_eval(&self, t: usize) -> bool {
        self.eval_every > 0 && (t.is_multiple_of(self.eval_every) || t == self.steps)
    }
}

/// `omega_0` for a run: the trainee initialised from the run seed.
pub fn initial_model(task: &Task, settings: &RunSettings) -> Result<ModelState> {
    mlp_init(&settings.trainee_spec(task), settings.seed)
}

/// Euclidean distance between a mini-batch gradient and the full gradient.
pub fn gradient_disagreement(grad_batch: &[f64], grad_full: &[f64]) -> Result<f64> {
    if grad_batch.len() != grad_full.len() {
        return Err(Error::ShapeError {
            op: "gradient_disagreement",
            lhs: vec![grad_batch.len()],
            rhs: vec![grad_full.len()],
        });
    }
    Ok(grad_batch
        .iter()
        .zip(grad_full)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Mean loss of `omega` on a batch; non-finite values are errors.
pub fn state_extract(omega: &ModelState, loss: LossKind, batch: &Batch) -> Result<f64> {
    let s = batch_loss(omega, loss, &batch.features, &batch.targets)?;
    if !s.is_finite() {
        return Err(Error::NonFiniteLoss(s));
    }
    Ok(s)
}

/// Trainee model plus everything needed to step it and record a trace row.
pub(crate) struct TraineeLoop {
    pub loss: LossKind,
    pub omega: ModelState,
    pub sampler: BatchSampler,
    pub settings: RunSettings,
    train_full: Option<Batch>,
    test_full: Option<Batch>,
}

/// Per-step evaluation of `omega` before the update.
pub(crate) struct Probe {
    pub f_before: f64,
    pub grad: Vec<f64>,
    pub disagreement: Option<f64>,
}

impl TraineeLoop {
    pub fn new(task: &Task, settings: &RunSettings) -> Result<Self> {
        if settings.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let omega = initial_model(task, settings)?;
        Ok(Self {
            loss: task.loss_kind(),
            omega,
            sampler: BatchSampler::new(task.train.len(), settings.batch_size, settings.seed)?,
            train_full: settings.record_disagreement.then(|| task.train.full_batch()),
            test_full: (settings.eval_every > 0).then(|| task.test.full_batch()),
            settings: settings.clone(),
        })
    }

    pub fn probe(&self, batch: &Batch) -> Result<Probe> {
        let (f_before, grad) =
            loss_and_grad(&self.omega, self.loss, &batch.features, &batch.targets)?;
        if !f_before.is_finite() {
            return Err(Error::NonFiniteLoss(f_before));
        }
        let disagreement = match &self.train_full {
            Some(full) => {
                let (_, g_full) =
                    loss_and_grad(&self.omega, self.loss, &full.features, &full.targets)?;
                Some(gradient_disagreement(&grad, &g_full)?)
            }
            None => None,
        };
        Ok(Probe {
            f_before,
            grad,
            disagreement,
        })
    }

    pub fn loss_on(&self, batch: &Batch) -> Result<f64> {
        batch_loss(&self.omega, self.loss, &batch.features, &batch.targets)
    }

    pub fn test_loss(&self, t: usize) -> Result<Option<f64>> {
        match &self.test_full {
            Some(test) if self.settings.wants_test_eval(t) => Ok(Some(self.loss_on(test)?)),
            _ => Ok(None),
        }
    }
}

pub(crate) fn check_divergence(t: usize, loss: f64, trace: &mut Vec<StepRecord>) -> Result<()> {
    if !loss.is_finite() || loss > DIVERGENCE_LOSS {
        return Err(Error::Divergence {
            step: t,
            loss,
            trace: std::mem::take(trace),
        });
    }
    Ok(())
}

/// Source of the learning rate used at each step of [`run_trainee`].
pub enum LrSource<'p> {
    /// An optimizer with its own (fixed) learning rate.
    Optimizer(OptimizerState),
    /// Plain SGD driven by a per-step rate computed from the state `s`.
    Policy(&'p mut dyn FnMut(f64) -> Result<f64>),
}

/// Trains the task's trainee for `settings.steps` steps.
pub fn run_trainee(task: &Task, settings: &RunSettings, mut source: LrSource<'_>) -> Result<Vec<StepRecord>> {
    let mut lp = TraineeLoop::new(task, settings)?;
    let mut sgd = OptimizerState::new(OptimizerKind::Sgd, 0.0, lp.omega.len());
    let mut trace = Vec::with_capacity(settings.steps);
    for t in 1..=settings.steps {
        let batch = lp.sampler.next_batch(&task.train);
        let probe = lp.probe(&batch)?;
        let a = match &mut source {
            LrSource::Optimizer(opt) => {
                opt.step(&mut lp.omega.params, &probe.grad, None)?;
                opt.hyper.lr
            }
            LrSource::Policy(policy) => {
                let a = policy(probe.f_before)?;
                sgd.step(&mut lp.omega.params, &probe.grad, Some(a))?;
                a
            }
        };
        let f_after = lp.loss_on(&batch)?;
        let record = StepRecord {
            t,
            s: probe.f_before,
            a,
            r: reward(probe.f_before, f_after),
            delta: None,
            f_before: probe.f_before,
            f_after,
            disagreement: probe.disagreement,
            test_loss: None,
            sample_i: batch.indices,
            sample_j: Vec::new(),
            params: settings.record_params.then(|| lp.omega.params.clone()),
            reset: false,
        };
        trace.push(record);
        check_divergence(t, f_after, &mut trace)?;
        let test = lp.test_loss(t)?;
        trace.last_mut().unwrap().test_loss = test;
    }
    Ok(trace)
}

/// Fixed-rate run of one baseline optimizer.
pub fn run_baseline(
    task: &Task,
    settings: &RunSettings,
    kind: OptimizerKind,
    lr: f64,
) -> Result<Vec<StepRecord>> {
    let n = settings.trainee_spec(task).param_count();
    run_trainee(task, settings, LrSource::Optimizer(OptimizerState::new(kind, lr, n)))
}

/// One-step loss decrement on the same sample.
pub fn reward(f_before: f64, f_after: f64) -> f64 {
    f_before - f_after
}
