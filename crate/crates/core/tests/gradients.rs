//! Reverse-mode gradients against central differences of the forward passes.

use aclr_core::ndcore::{Graph, Tensor};
use aclr_core::nets::{
    batch_loss, critic_eval, critic_forward, critic_init, loss_and_grad, lstm_init, lstm_step, lstm_step_graph,
    mlp_init, Activation, LossKind, LstmParams, LstmSpec, LstmState, MlpSpec, ModelState, OutputHead, Targets,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-5;

/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

fn central<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], i: usize) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + H;
    let plus = f(&p);
    p[i] = x[i] - H;
    let minus = f(&p);
    (plus - minus) / (2.0 * H)
}

fn gauss(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn mlp_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=5)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=5));
    }
    let classify = rng.random_bool(0.5);
    if classify {
        *sizes.last_mut().unwrap() = rng.random_range(2..=4);
    }
    let activation = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    let head = if classify { OutputHead::SoftmaxCrossEntropy } else { OutputHead::Linear };
    let mut spec = MlpSpec::new(sizes.clone(), activation, head);
    if rng.random_bool(0.25) {
        spec = spec.without_bias();
    }
    let mut model = mlp_init(&spec, rng.random()).unwrap();
    // Zero biases put ReLU pre-activations exactly on the kink whenever an
    // upstream unit is inactive; jitter every parameter off its initial value.
    for p in model.params.iter_mut() {
        *p += rng.random_range(-0.1..0.1);
    }
    let batch = rng.random_range(1..=6);
    let (d_in, d_out) = (sizes[0], *sizes.last().unwrap());
    let x = Tensor::from_vec(&[batch, d_in], gauss(&mut rng, batch * d_in, 2.0)).unwrap();
    let y = if classify {
        Targets::Class((0..batch).map(|_| rng.random_range(0..d_out)).collect())
    } else {
        Targets::Real(Tensor::from_vec(&[batch, d_out], gauss(&mut rng, batch * d_out, 2.0)).unwrap())
    };
    let kind = LossKind::from(head);
    let (_, grad) = loss_and_grad(&model, kind, &x, &y).unwrap();
    let f = |p: &[f64]| {
        let m = ModelState::from_params(spec.clone(), p.to_vec()).unwrap();
        batch_loss(&m, kind, &x, &y).unwrap()
    };
    (0..model.len())
        .map(|i| rel_err(grad[i], central(f, &model.params, i)))
        .fold(0.0, f64::max)
}

/// Loss of a 5-step unroll from the zero state: a fixed weighting of the
/// head outputs, so gradients flow through every step.
fn unroll_loss(params: &LstmParams, xs: &[Vec<f64>], w: &[f64]) -> f64 {
    let mut state = LstmState::zeros(&params.spec);
    let mut total = 0.0;
    for (x, wt) in xs.iter().zip(w) {
        let (y, next) = lstm_step(params, &state, x).unwrap();
        total += wt * y + 0.5 * y * y;
        state = next;
    }
    total
}

fn unroll_grad(params: &LstmParams, xs: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut g = Graph::new();
    let leaves = params.leaves(&mut g, true);
    let mut state = LstmState::zeros(&params.spec).leaves(&mut g);
    let mut total = None;
    for (x, &wt) in xs.iter().zip(w) {
        let xi = g.constant(Tensor::row(x.clone()));
        let (y, next) = lstm_step_graph(&mut g, &params.spec, &leaves, &state, xi).unwrap();
        let wn = g.constant(Tensor::from_vec(&[1, 1], vec![wt]).unwrap());
        let half = g.constant(Tensor::from_vec(&[1, 1], vec![0.5]).unwrap());
        let lin = g.mul(wn, y).unwrap();
        let sq = g.mul(y, y).unwrap();
        let sq = g.mul(half, sq).unwrap();
        let term = g.add(lin, sq).unwrap();
        total = Some(match total {
            None => term,
            Some(t) => g.add(t, term).unwrap(),
        });
        state = next;
    }
    let root = total.unwrap();
    g.backward(root).unwrap();
    params.collect_grads(&g, &leaves)
}

fn lstm_problem(rng: &mut ChaCha8Rng, spec: LstmSpec) -> (LstmParams, Vec<Vec<f64>>, Vec<f64>) {
    let mut params = lstm_init(spec, rng.random()).unwrap();
    // Move the head and biases off their special initial values.
    for p in params.params.iter_mut() {
        *p += rng.random_range(-0.5..0.5);
    }
    let xs = (0..5).map(|_| gauss(rng, spec.input_dim, 2.0)).collect();
    let w = gauss(rng, 5, 1.0);
    (params, xs, w)
}

fn lstm_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = LstmSpec {
        input_dim: rng.random_range(1..=3),
        hidden_dim: rng.random_range(1..=6),
        num_layers: rng.random_range(1..=3),
    };
    let (params, xs, w) = lstm_problem(&mut rng, spec);
    let grad = unroll_grad(&params, &xs, &w);
    let f = |p: &[f64]| unroll_loss(&LstmParams::from_params(spec, p.to_vec()).unwrap(), &xs, &w);
    (0..params.len())
        .map(|i| rel_err(grad[i], central(f, &params.params, i)))
        .fold(0.0, f64::max)
}

fn critic_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=3);
    let mut phi = critic_init(d, rng.random()).unwrap();
    for p in phi.params.iter_mut() {
        *p += rng.random_range(-0.5..0.5);
    }
    let s = gauss(&mut rng, d, 2.0);
    let a = rng.random_range(-1.0..1.0);
    let ev = critic_eval(&phi, &s, a).unwrap();
    assert_eq!(ev.q, critic_forward(&phi, &s, a).unwrap());
    let spec = phi.spec.clone();
    let f = |p: &[f64]| critic_forward(&ModelState::from_params(spec.clone(), p.to_vec()).unwrap(), &s, a).unwrap();
    let worst_phi = (0..phi.len())
        .map(|i| rel_err(ev.dq_dphi[i], central(f, &phi.params, i)))
        .fold(0.0, f64::max);
    let da = central(|v| critic_forward(&phi, &s, v[0]).unwrap(), &[a], 0);
    worst_phi.max(rel_err(ev.dq_da, da))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mlp_gradients_match_finite_differences(seed in any::<u64>()) {
        let err = mlp_instance(seed);
        prop_assert!(err < TOL, "max relative error {err:e}");
    }

    #[test]
    fn lstm_bptt_gradients_match_finite_differences(seed in any::<u64>()) {
        let err = lstm_instance(seed);
        prop_assert!(err < TOL, "max relative error {err:e}");
    }

    #[test]
    fn critic_gradients_match_finite_differences(seed in any::<u64>()) {
        let err = critic_instance(seed);
        prop_assert!(err < TOL, "max relative error {err:e}");
    }
}

#[test]
fn full_size_actor_bptt_on_sampled_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = LstmSpec::default();
    let (params, xs, w) = lstm_problem(&mut rng, spec);
    let grad = unroll_grad(&params, &xs, &w);
    let f = |p: &[f64]| unroll_loss(&LstmParams::from_params(spec, p.to_vec()).unwrap(), &xs, &w);
    for _ in 0..300 {
        let i = rng.random_range(0..params.len());
        let err = rel_err(grad[i], central(f, &params.params, i));
        assert!(err < TOL, "coordinate {i}: {err:e}");
    }
}
