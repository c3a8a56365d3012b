//! Dense neural-network primitives: the graph-convolution layer, softmax,
//! cross-entropy, the Adam/SGD optimizer, and finite-difference gradient
//! checking. Everything runs in f64 so analytic gradients can be verified
//! against central differences to tight tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A trainable weight matrix with its gradient accumulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl Parameter {
    /// Glorot-style uniform initialization scaled by fan-in and fan-out.
    pub fn glorot(name: impl Into<String>, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let mut value = DenseMatrix::zeros(rows, cols);
        for v in value.data_mut() {
            *v = (rng.random::<f64>() * 2.0 - 1.0) * limit;
        }
        Parameter {
            name: name.into(),
            value,
            grad: DenseMatrix::zeros(rows, cols),
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

pub fn apply_activation(z: &DenseMatrix, activation: Activation) -> DenseMatrix {
    match activation {
        Activation::Relu => z.map(|v| if v > 0.0 { v } else { 0.0 }),
        Activation::Identity => z.clone(),
    }
}

/// Derivative mask of the activation at the pre-activation values.
pub fn activation_grad(z: &DenseMatrix, activation: Activation) -> DenseMatrix {
    match activation {
        Activation::Relu => z.map(|v| if v > 0.0 { 1.0 } else { 0.0 }),
        Activation::Identity => z.map(|_| 1.0),
    }
}

/// One graph-convolution layer: `activation(P * H * W)`.
///
/// The product associates as `P * (H * W)`, which is both cheaper when `W`
/// narrows the features and exact for the identity-weight case.
pub fn gcn_layer(
    p: &DenseMatrix,
    h: &DenseMatrix,
    w: &DenseMatrix,
    activation: Activation,
) -> Result<DenseMatrix> {
    let hw = h.matmul(w)?;
    let z = p.matmul(&hw)?;
    Ok(apply_activation(&z, activation))
}

/// Row-wise softmax with max-shift for overflow safety.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(logits.rows(), logits.cols());
    for i in 0..logits.rows() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let out_row = out.row_mut(i);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out_row[j] = e;
            sum += e;
        }
        for v in out_row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Probability floor used when a target-class probability underflows to 0.
pub const PROB_CLAMP: f64 = 1e-12;

/// Mean cross-entropy between one-hot targets and predicted distributions,
/// restricted to `rows`. Returns the loss and whether any target-class
/// probability had to be clamped at [`PROB_CLAMP`].
pub fn cross_entropy_masked(
    targets: &DenseMatrix,
    predictions: &DenseMatrix,
    rows: &[usize],
) -> (f64, bool) {
    assert!(!rows.is_empty(), "cross-entropy over an empty node set");
    let mut total = 0.0;
    let mut clamped = false;
    for &i in rows {
        for (y, yhat) in targets.row(i).iter().zip(predictions.row(i)) {
            if *y != 0.0 {
                let p = if *yhat < PROB_CLAMP {
                    clamped = true;
                    PROB_CLAMP
                } else {
                    *yhat
                };
                total -= y * p.ln();
            }
        }
    }
    (total / rows.len() as f64, clamped)
}

/// Mean cross-entropy over all rows.
pub fn cross_entropy(targets: &DenseMatrix, predictions: &DenseMatrix) -> f64 {
    let rows: Vec<usize> = (0..targets.rows()).collect();
    cross_entropy_masked(targets, predictions, &rows).0
}

/// Fused gradient of mean cross-entropy through softmax at the logits:
/// `(softmax(z) - Y) / |rows|` on the evaluated rows, zero elsewhere.
pub fn softmax_cross_entropy_grad(
    targets: &DenseMatrix,
    probabilities: &DenseMatrix,
    rows: &[usize],
) -> DenseMatrix {
    let mut grad = DenseMatrix::zeros(targets.rows(), targets.cols());
    let scale = 1.0 / rows.len() as f64;
    for &i in rows {
        let p = probabilities.row(i);
        let y = targets.row(i);
        let g = grad.row_mut(i);
        for j in 0..p.len() {
            g[j] = (p[j] - y[j]) * scale;
        }
    }
    grad
}

/// Optimizer family; plain gradient descent is kept for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn adam(alpha: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(alpha: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            alpha,
            beta1: 0.0,
            beta2: 0.0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MomentSlot {
    first: DenseMatrix,
    second: DenseMatrix,
}

/// Per-parameter moment estimates and the step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    step: u64,
    slots: Vec<MomentSlot>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &[Parameter]) -> Self {
        let slots = params
            .iter()
            .map(|p| MomentSlot {
                first: DenseMatrix::zeros(p.value.rows(), p.value.cols()),
                second: DenseMatrix::zeros(p.value.rows(), p.value.cols()),
            })
            .collect();
        OptimizerState {
            config,
            step: 0,
            slots,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Apply one optimizer update from the gradients stored in `params`.
pub fn optimizer_step(params: &mut [Parameter], state: &mut OptimizerState) -> Result<()> {
    assert_eq!(params.len(), state.slots.len(), "optimizer state out of sync");
    for p in params.iter() {
        if !p.grad.is_finite() {
            return Err(Error::NonFiniteGradient {
                name: p.name.clone(),
            });
        }
    }
    state.step += 1;
    let c = state.config;
    match c.kind {
        OptimizerKind::Sgd => {
            for p in params.iter_mut() {
                let grads = p.grad.data().to_vec();
                for (v, g) in p.value.data_mut().iter_mut().zip(grads) {
                    *v -= c.alpha * g;
                }
            }
        }
        OptimizerKind::Adam => {
            let t = state.step as i32;
            let bias1 = 1.0 - c.beta1.powi(t);
            let bias2 = 1.0 - c.beta2.powi(t);
            for (p, slot) in params.iter_mut().zip(&mut state.slots) {
                let grads = p.grad.data().to_vec();
                for (((v, g), m), s) in p
                    .value
                    .data_mut()
                    .iter_mut()
                    .zip(grads)
                    .zip(slot.first.data_mut())
                    .zip(slot.second.data_mut())
                {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *s = c.beta2 * *s + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / bias1;
                    let s_hat = *s / bias2;
                    *v -= c.alpha * m_hat / (s_hat.sqrt() + c.epsilon);
                }
            }
        }
    }
    Ok(())
}

/// Result of a finite-difference gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub samples: usize,
}

/// Floor on the relative-error denominator: gradient entries below this
/// magnitude sit inside central-difference rounding noise.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

/// Compare analytic gradients (already stored in `params`) against central
/// differences of `loss` on a random subsample of parameter entries.
///
/// Relative error uses the numerical estimate as reference with a
/// [`GRAD_CHECK_FLOOR`] floor, so noise around zero gradients does not
/// dominate.
pub fn grad_check<F>(
    params: &mut [Parameter],
    mut loss: F,
    h: f64,
    min_samples: usize,
    seed: u64,
) -> GradCheckReport
where
    F: FnMut(&[Parameter]) -> f64,
{
    let sizes: Vec<usize> = params.iter().map(|p| p.value.data().len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let entries: Vec<(usize, usize)> = if total <= min_samples {
        sizes
            .iter()
            .enumerate()
            .flat_map(|(pi, &len)| (0..len).map(move |ei| (pi, ei)))
            .collect()
    } else {
        (0..min_samples)
            .map(|_| {
                let flat = rng.random_range(0..total);
                let mut acc = 0;
                for (pi, &len) in sizes.iter().enumerate() {
                    if flat < acc + len {
                        return (pi, flat - acc);
                    }
                    acc += len;
                }
                unreachable!("flat index within total")
            })
            .collect()
    };

    let mut max_rel = 0.0f64;
    for (pi, ei) in &entries {
        let original = params[*pi].value.data()[*ei];
        params[*pi].value.data_mut()[*ei] = original + h;
        let plus = loss(params);
        params[*pi].value.data_mut()[*ei] = original - h;
        let minus = loss(params);
        params[*pi].value.data_mut()[*ei] = original;

        let numeric = (plus - minus) / (2.0 * h);
        let analytic = params[*pi].grad.data()[*ei];
        let rel = (analytic - numeric).abs() / numeric.abs().max(GRAD_CHECK_FLOOR);
        max_rel = max_rel.max(rel);
    }

    GradCheckReport {
        max_rel_error: max_rel,
        samples: entries.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gcn_layer_identity_path() {
        let p = DenseMatrix::identity(1);
        let h = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let w = DenseMatrix::identity(1);
        let out = gcn_layer(&p, &h, &w, Activation::Relu).unwrap();
        assert_eq!(out.data(), &[2.0]);
    }

    #[test]
    fn relu_clamps_negatives() {
        let z = DenseMatrix::from_rows(&[vec![-1.0, 3.0]]).unwrap();
        assert_eq!(apply_activation(&z, Activation::Relu).data(), &[0.0, 3.0]);
    }

    #[test]
    fn gcn_layer_two_node_smoothing() {
        let p = DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let h = DenseMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let w = DenseMatrix::identity(1);
        let out = gcn_layer(&p, &h, &w, Activation::Identity).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 2.0);
        assert_abs_diff_eq!(out.get(1, 0), 2.0);
    }

    #[test]
    fn gcn_layer_shape_mismatch() {
        let p = DenseMatrix::identity(2);
        let h = DenseMatrix::zeros(2, 3);
        let w = DenseMatrix::zeros(4, 2);
        let err = gcn_layer(&p, &h, &w, Activation::Identity).unwrap_err();
        assert!(err.to_string().contains("2x3") && err.to_string().contains("4x2"));
    }

    #[test]
    fn softmax_examples() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let s = softmax_rows(&m);
        assert_abs_diff_eq!(s.get(0, 0), 0.5, epsilon = 1e-15);

        let big = DenseMatrix::from_rows(&[vec![1000.0, 1000.0]]).unwrap();
        let s = softmax_rows(&big);
        assert!(s.is_finite());
        assert_abs_diff_eq!(s.get(0, 1), 0.5, epsilon = 1e-15);

        let ln2 = DenseMatrix::from_rows(&[vec![2.0f64.ln(), 0.0]]).unwrap();
        let s = softmax_rows(&ln2);
        assert_abs_diff_eq!(s.get(0, 0), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(0, 1), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let y = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let exact = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(cross_entropy(&y, &exact), 0.0);

        let even = DenseMatrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert_abs_diff_eq!(cross_entropy(&y, &even), 2.0f64.ln(), epsilon = 1e-15);

        let y2 = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let mix = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_abs_diff_eq!(cross_entropy(&y2, &mix), 2.0f64.ln() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let y = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let p = DenseMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let (loss, clamped) = cross_entropy_masked(&y, &p, &[0]);
        assert!(clamped);
        assert!(loss.is_finite());
        assert_abs_diff_eq!(loss, -PROB_CLAMP.ln(), epsilon = 1e-9);
    }

    #[test]
    fn fused_grad_matches_definition() {
        let y = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let logits = DenseMatrix::from_rows(&[vec![0.3, -0.2], vec![1.0, 0.5]]).unwrap();
        let probs = softmax_rows(&logits);
        let g = softmax_cross_entropy_grad(&y, &probs, &[0, 1]);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(
                    g.get(i, j),
                    (probs.get(i, j) - y.get(i, j)) / 2.0,
                    epsilon = 1e-15
                );
            }
        }
    }

    fn scalar_param(name: &str, v: f64) -> Parameter {
        Parameter {
            name: name.into(),
            value: DenseMatrix::from_rows(&[vec![v]]).unwrap(),
            grad: DenseMatrix::zeros(1, 1),
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut params = vec![scalar_param("w", 0.7)];
        let mut state = OptimizerState::new(OptimizerConfig::adam(0.01), &params);
        optimizer_step(&mut params, &mut state).unwrap();
        assert_abs_diff_eq!(params[0].value.get(0, 0), 0.7);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_alpha() {
        let mut params = vec![scalar_param("w", 0.0)];
        params[0].grad.set(0, 0, 1.0);
        let mut state = OptimizerState::new(OptimizerConfig::adam(0.01), &params);
        optimizer_step(&mut params, &mut state).unwrap();
        assert_abs_diff_eq!(params[0].value.get(0, 0), -0.01, epsilon = 1e-9);
    }

    #[test]
    fn sgd_step_is_plain_descent() {
        let mut params = vec![scalar_param("w", 1.0)];
        params[0].grad.set(0, 0, 2.0);
        let mut state = OptimizerState::new(OptimizerConfig::sgd(0.1), &params);
        optimizer_step(&mut params, &mut state).unwrap();
        assert_abs_diff_eq!(params[0].value.get(0, 0), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn optimizer_rejects_non_finite_gradient() {
        let mut params = vec![scalar_param("theta", 0.0)];
        params[0].grad.data_mut()[0] = f64::NAN;
        let mut state = OptimizerState::new(OptimizerConfig::adam(0.01), &params);
        let err = optimizer_step(&mut params, &mut state).unwrap_err();
        assert!(err.to_string().contains("theta"));
    }

    #[test]
    fn optimizer_is_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut params = vec![Parameter::glorot("w", 3, 3, &mut rng)];
            let mut state = OptimizerState::new(OptimizerConfig::adam(0.01), &params);
            for step in 0..25 {
                let values = params[0].value.clone();
                for (g, v) in params[0].grad.data_mut().iter_mut().zip(values.data()) {
                    *g = v.sin() + step as f64 * 0.01;
                }
                optimizer_step(&mut params, &mut state).unwrap();
            }
            params[0].value.data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn grad_check_linear_model() {
        // loss = sum(W . x) so dW[i] = x[i]
        let x = [0.4, -1.2, 2.0];
        let mut params = vec![Parameter {
            name: "w".into(),
            value: DenseMatrix::from_rows(&[vec![0.1, 0.2, 0.3]]).unwrap(),
            grad: DenseMatrix::from_rows(&[x.to_vec()]).unwrap(),
        }];
        let report = grad_check(
            &mut params,
            |p| {
                p[0].value
                    .data()
                    .iter()
                    .zip(&x)
                    .map(|(w, xi)| w * xi)
                    .sum()
            },
            1e-5,
            100,
            3,
        );
        assert!(report.max_rel_error < 1e-9, "rel {}", report.max_rel_error);
        assert_eq!(report.samples, 3);
    }

    #[test]
    fn grad_check_detects_corruption() {
        let x = [0.4, -1.2, 2.0];
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let mut params = vec![Parameter {
            name: "w".into(),
            value: DenseMatrix::from_rows(&[vec![0.1, 0.2, 0.3]]).unwrap(),
            grad: DenseMatrix::from_rows(&[doubled]).unwrap(),
        }];
        let report = grad_check(
            &mut params,
            |p| {
                p[0].value
                    .data()
                    .iter()
                    .zip(&x)
                    .map(|(w, xi)| w * xi)
                    .sum()
            },
            1e-5,
            100,
            3,
        );
        assert!((report.max_rel_error - 1.0).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn softmax_rows_sum_to_one_and_keep_argmax(
            rows in proptest::collection::vec(
                proptest::collection::vec(-50.0f64..50.0, 4),
                1..6,
            )
        ) {
            let m = DenseMatrix::from_rows(&rows).unwrap();
            let s = softmax_rows(&m);
            for i in 0..m.rows() {
                let sum: f64 = s.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                let argmax_in = (0..4).max_by(|&a, &b| m.get(i, a).partial_cmp(&m.get(i, b)).unwrap()).unwrap();
                let argmax_out = (0..4).max_by(|&a, &b| s.get(i, a).partial_cmp(&s.get(i, b)).unwrap()).unwrap();
                prop_assert_eq!(argmax_in, argmax_out);
                prop_assert!(s.row(i).iter().all(|&p| p > 0.0));
            }
        }

        #[test]
        fn gcn_layer_is_linear_in_features(seed in 0u64..200, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rand_mat = |rng: &mut ChaCha8Rng, r: usize, c: usize| {
                let mut m = DenseMatrix::zeros(r, c);
                for v in m.data_mut() {
                    *v = rng.random::<f64>() * 2.0 - 1.0;
                }
                m
            };
            let p = rand_mat(&mut rng, 4, 4);
            let h1 = rand_mat(&mut rng, 4, 3);
            let h2 = rand_mat(&mut rng, 4, 3);
            let w = rand_mat(&mut rng, 3, 2);

            let combined = h1.scale(a).add(&h2.scale(b)).unwrap();
            let lhs = gcn_layer(&p, &combined, &w, Activation::Identity).unwrap();
            let rhs = gcn_layer(&p, &h1, &w, Activation::Identity)
                .unwrap()
                .scale(a)
                .add(&gcn_layer(&p, &h2, &w, Activation::Identity).unwrap().scale(b))
                .unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }

        #[test]
        fn cross_entropy_convex_along_lines(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let classes = 4;
            let mut y = DenseMatrix::zeros(3, classes);
            for i in 0..3 {
                let c = rng.random_range(0..classes);
                y.set(i, c, 1.0);
            }
            let rand_logits = |rng: &mut ChaCha8Rng| {
                let mut m = DenseMatrix::zeros(3, classes);
                for v in m.data_mut() {
                    *v = rng.random::<f64>() * 10.0 - 5.0;
                }
                m
            };
            let z0 = rand_logits(&mut rng);
            let z1 = rand_logits(&mut rng);
            let mid = z0.add(&z1).unwrap().scale(0.5);
            let f = |z: &DenseMatrix| cross_entropy(&y, &softmax_rows(z));
            prop_assert!(f(&mid) <= 0.5 * (f(&z0) + f(&z1)) + 1e-9);
        }
    }
}
