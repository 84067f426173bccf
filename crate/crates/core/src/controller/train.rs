use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{td_error, Actor, ControllerConfig, ControllerState, StepRecord};
use crate::error::Result;
use crate::nets::ModelState;
use crate::optim::{OptimizerKind, OptimizerState};
use crate::tasks::Task;
use crate::trainee::{check_divergence, reward, run_trainee, LrSource, RunSettings, TraineeLoop};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Trainee parameters at the end of the run (after any final reset).
    pub omega: ModelState,
    pub controller: ControllerState,
    pub trace: Vec<StepRecord>,
}

/// Trains a freshly initialised controller (seeded from `settings.seed`)
/// alongside the task's trainee for `settings.steps` steps.
pub fn train_controller(task: &Task, settings: &RunSettings, config: ControllerConfig) -> Result<TrainOutcome> {
    let controller = ControllerState::new(config, settings.seed)?;
    train_controller_from(controller, task, settings)
}

/// Continues training `controller` on a fresh trainee.
///
/// Each step samples disjoint batches `x_i`, `x_j`; the actor sets the rate
/// from the loss on `x_i`, the trainee takes one SGD step on `x_i`, the
/// critic is moved along the TD error of the transition and the actor along
/// the policy gradient at the post-update loss on `x_j`. Every
/// `reset_every` steps the trainee returns to `omega_0` and the actor state
/// is zeroed.
pub fn train_controller_from(
    mut ctrl: ControllerState,
    task: &Task,
    settings: &RunSettings,
) -> Result<TrainOutcome> {
    ctrl.config.validate()?;
    let mut lp = TraineeLoop::new(task, settings)?;
    let omega0 = lp.omega.clone();
    let mut sgd = OptimizerState::new(OptimizerKind::Sgd, 0.0, lp.omega.len());
    let gamma = ctrl.config.gamma;
    let mut trace = Vec::with_capacity(settings.steps);
    ctrl.reset_episode();
    let mut noise = ChaCha8Rng::seed_from_u64(settings.seed);
    noise.set_stream(2);

    for t in 1..=settings.steps {
        let (bi, bj) = lp.sampler.next_batch_pair(&task.train)?;
        let probe = lp.probe(&bi)?;
        let s = probe.f_before;
        let (mut a, raw) = ctrl.actor_act(s)?;
        if ctrl.config.exploration > 0.0 {
            let z: f64 = StandardNormal.sample(&mut noise);
            a = ctrl.config.action.apply(raw + ctrl.config.exploration * z);
        }
        sgd.step(&mut lp.omega.params, &probe.grad, Some(a))?;
        let f_after = lp.loss_on(&bi)?;
        trace.push(StepRecord {
            t,
            s,
            a,
            r: reward(s, f_after),
            delta: None,
            f_before: s,
            f_after,
            disagreement: probe.disagreement,
            test_loss: None,
            sample_i: bi.indices,
            sample_j: bj.indices.clone(),
            params: None,
            reset: false,
        });
        check_divergence(t, f_after, &mut trace)?;
        let r = reward(s, f_after);

        // The next state on x_i is exactly the post-update loss.
        let s_next = f_after;
        let (a_next, _) = ctrl.actor.peek(s_next)?;
        let q_next = ctrl.critic_q(s_next, a_next)?;
        let q_curr = ctrl.critic_q(s, a)?;
        let delta = td_error(r, q_next, q_curr, gamma);
        let clipped = match ctrl.config.td_clip {
            Some(c) => delta.clamp(-c, c),
            None => delta,
        };
        ctrl.critic_accumulate(clipped, s, a)?;

        let s_j = lp.loss_on(&bj)?;
        check_divergence(t, s_j, &mut trace)?;
        ctrl.actor_accumulate(s_j)?;

        let test_loss = lp.test_loss(t)?;
        let reset = t % ctrl.config.reset_every == 0;
        if reset {
            lp.omega = omega0.clone();
            ctrl.reset_episode();
        }
        let rec = trace.last_mut().expect("record pushed above");
        rec.delta = Some(delta);
        rec.test_loss = test_loss;
        rec.reset = reset;
        if settings.record_params {
            rec.params = Some(lp.omega.params.clone());
        }
    }
    Ok(TrainOutcome {
        omega: lp.omega,
        controller: ctrl,
        trace,
    })
}

/// Runs the trainee with rates from a frozen actor; no resets, no controller
/// updates.
pub fn evaluate_policy(actor: &Actor, task: &Task, settings: &RunSettings) -> Result<Vec<StepRecord>> {
    let mut live = Actor::new(actor.theta.clone(), actor.map);
    let mut policy = |s: f64| live.act(s).map(|(a, _)| a);
    run_trainee(task, settings, LrSource::Policy(&mut policy))
}
