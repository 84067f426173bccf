//! First iterates of every baseline optimizer against independently derived
//! values.

// Reference values are printed to full oracle precision.
#![allow(clippy::excessive_precision)]

use aclr_core::optim::{OptimizerKind, OptimizerState};

const TOL: f64 = 1e-12;

fn iterates(kind: OptimizerKind, lr: f64, w0: f64, grad: impl Fn(f64) -> f64) -> [f64; 3] {
    let mut st = OptimizerState::new(kind, lr, 1);
    let mut w = [w0];
    std::array::from_fn(|_| {
        let g = grad(w[0]);
        st.step(&mut w, &[g], None).unwrap();
        w[0]
    })
}

fn assert_close(kind: OptimizerKind, got: [f64; 3], want: [f64; 3]) {
    for (t, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= TOL, "{kind} step {}: {g} vs {w}", t + 1);
    }
}

/// Constant gradient `c` (the linear loss `c w`), where every update has a
/// closed form in `t`.
#[test]
fn constant_gradient_closed_forms() {
    let (c, lr, w0) = (0.8, 0.1, 2.0);
    let g = |_: f64| c;
    let steps = [1.0, 2.0, 3.0];

    let sgd = steps.map(|t| w0 - t * lr * c);
    assert_close(OptimizerKind::Sgd, iterates(OptimizerKind::Sgd, lr, w0, g), sgd);

    // v_t = c (1 + mu + ... + mu^{t-1}).
    let mu: f64 = 0.9;
    let mut w = w0;
    let momentum = steps.map(|t| {
        w -= lr * c * (1.0 - mu.powi(t as i32)) / (1.0 - mu);
        w
    });
    assert_close(OptimizerKind::Momentum, iterates(OptimizerKind::Momentum, lr, w0, g), momentum);

    // Accumulator t c^2.
    let mut w = w0;
    let adagrad = steps.map(|t| {
        w -= lr * c / ((t * c * c).sqrt() + 1e-8);
        w
    });
    assert_close(OptimizerKind::Adagrad, iterates(OptimizerKind::Adagrad, lr, w0, g), adagrad);

    // Mean square (1 - rho^t) c^2.
    let rho: f64 = 0.9;
    let mut w = w0;
    let rmsprop = steps.map(|t| {
        w -= lr * c / (((1.0 - rho.powi(t as i32)) * c * c).sqrt() + 1e-8);
        w
    });
    assert_close(OptimizerKind::Rmsprop, iterates(OptimizerKind::Rmsprop, lr, w0, g), rmsprop);

    // Bias correction recovers m_hat = c and v_hat = c^2 exactly.
    let adam = steps.map(|t| w0 - t * lr * c / (c + 1e-8));
    assert_close(OptimizerKind::Adam, iterates(OptimizerKind::Adam, lr, w0, g), adam);

    // Adadelta: E[g^2]_t = (1 - rho^t) c^2 and the update recursion on E[dx^2].
    let rho: f64 = 0.95;
    let eps = 1e-6;
    let (mut edx, mut w): (f64, f64) = (0.0, w0);
    let adadelta = steps.map(|t| {
        let eg = (1.0 - rho.powi(t as i32)) * c * c;
        let u = c * (edx + eps).sqrt() / (eg + eps).sqrt();
        edx = rho * edx + (1.0 - rho) * u * u;
        w -= 1.0 * u;
        w
    });
    assert_close(OptimizerKind::Adadelta, iterates(OptimizerKind::Adadelta, 1.0, w0, g), adadelta);
}

/// `f(w) = (w - 1.5)^2` from `w = 0`; reference iterates computed in 50-digit
/// arithmetic by scripts/optimizer_reference.py.
#[test]
fn quadratic_reference_iterates() {
    let g = |w: f64| 2.0 * (w - 1.5);
    let table: [(OptimizerKind, f64, [f64; 3]); 6] = [
        (OptimizerKind::Sgd, 0.1, [0.3, 0.54, 0.732]),
        (OptimizerKind::Momentum, 0.1, [0.3, 0.81, 1.407]),
        (
            OptimizerKind::Adagrad,
            0.1,
            [0.099999999666666667778, 0.16823182454507936133, 0.22267546032950568681],
        ),
        (
            OptimizerKind::Rmsprop,
            0.1,
            [0.316227762683504635, 0.51846186635660419531, 0.6727509112627372013],
        ),
        (
            OptimizerKind::Adadelta,
            1.0,
            [0.0044721309859679111112, 0.0089946404440561724408, 0.013546689973108270317],
        ),
        (
            OptimizerKind::Adam,
            0.1,
            [0.099999999666666667778, 0.19976093770772043935, 0.29909712948190087654],
        ),
    ];
    for (kind, lr, want) in table {
        assert_close(kind, iterates(kind, lr, 0.0, g), want);
    }
}

#[test]
fn override_only_for_sgd() {
    for kind in OptimizerKind::ALL {
        let mut st = OptimizerState::new(kind, 0.1, 1);
        let mut w = [1.0];
        let r = st.step(&mut w, &[1.0], Some(0.5));
        if kind == OptimizerKind::Sgd {
            r.unwrap();
            assert_eq!(w, [0.5]);
        } else {
            assert!(r.is_err());
            assert_eq!(w, [1.0]);
        }
    }
}
