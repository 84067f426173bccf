//! Trainee MLPs, the stacked-LSTM actor body, the critic and losses.

mod critic;
mod loss;
mod lstm;
mod mlp;

pub use critic::{critic_eval, critic_forward, critic_graph, critic_init, critic_spec, CriticEval, CRITIC_HIDDEN};
pub use loss::{batch_loss, loss_and_grad, loss_eval, LossKind, Targets};
pub use lstm::{lstm_init, lstm_step, lstm_step_graph, LstmLeaves, LstmParams, LstmSpec, LstmState};
pub use mlp::{mlp_forward, mlp_forward_graph, mlp_init, Activation, MlpSpec, ModelState, OutputHead};
