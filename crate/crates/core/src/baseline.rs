//! Backpropagation baseline: exact full-batch MSE gradients and Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::network::{dataset_loss, forward_pass, Activation, Dataset, Layer, MlpParams};
use crate::trace::drive;
use crate::{Error, Result, TrainTrace};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Gradient of the loss laid out like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    /// Same ordering as [`MlpParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.biases);
        }
        out
    }
}

/// Reverse-mode gradient of the full-batch MSE with respect to every weight
/// and bias. Bias gradients carry the sign of the subtracted-bias convention.
pub fn backprop_gradients(net: &MlpParams, act: &Activation, data: &Dataset) -> Result<Gradients> {
    let (hidden, preds) = forward_pass(net, act, &data.inputs)?;
    if preds.len() != data.targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} targets",
            preds.len(),
            data.targets.len()
        )));
    }
    let n = preds.len() as f64;
    let hs = hidden.activations;

    // dL/dz at the output neuron
    let mut delta = Matrix::column(
        &preds
            .iter()
            .zip(&data.targets)
            .map(|(p, y)| 2.0 * (p - y) / n * act.derivative_from_output(*p))
            .collect::<Vec<_>>(),
    );

    let layers = net.layers();
    let mut grads: Vec<Layer> = Vec::with_capacity(layers.len());
    for l in (0..layers.len()).rev() {
        let below = if l == 0 { &data.inputs } else { &hs[l - 1] };
        let weights = below.transpose().matmul(&delta)?;
        let biases = (0..delta.cols())
            .map(|k| -delta.col(k).iter().sum::<f64>())
            .collect();
        if l > 0 {
            let mut back = delta.matmul(&layers[l].weights.transpose())?;
            for (d, h) in back.as_mut_slice().iter_mut().zip(below.as_slice()) {
                *d *= act.derivative_from_output(*h);
            }
            delta = back;
        }
        grads.push(Layer { weights, biases });
    }
    grads.reverse();
    Ok(Gradients { layers: grads })
}

/// Adam moments and hyperparameters; moments are kept flat in
/// [`MlpParams::flatten`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(net: &MlpParams, lr: f64) -> Self {
        let n = net.num_params();
        Self {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
            lr,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    net: &MlpParams,
    grads: &Gradients,
    mut state: AdamState,
) -> Result<(MlpParams, AdamState)> {
    let g = grads.flatten();
    let mut theta = net.flatten();
    if g.len() != theta.len() || state.first_moment.len() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gradients / {} moments for {} parameters",
            g.len(),
            state.first_moment.len(),
            theta.len()
        )));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..theta.len() {
        let m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g[i];
        let v = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g[i] * g[i];
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / c1;
        let v_hat = v / c2;
        theta[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok((net.with_flat(&theta)?, state))
}

/// Full-batch Adam. The batch is reshuffled with a seeded RNG every epoch;
/// the recorded loss is always measured on the dataset in its original order.
pub fn train_adam(
    net: &MlpParams,
    act: &Activation,
    data: &Dataset,
    lr: f64,
    max_epochs: usize,
    seed: u64,
) -> Result<(MlpParams, TrainTrace)> {
    train_adam_tracked(net, act, data, lr, max_epochs, seed, None)
}

/// As [`train_adam`], also recording the parameter error against `truth`.
pub fn train_adam_tracked(
    net: &MlpParams,
    act: &Activation,
    data: &Dataset,
    lr: f64,
    max_epochs: usize,
    seed: u64,
    truth: Option<&MlpParams>,
) -> Result<(MlpParams, TrainTrace)> {
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be finite and non-negative, got {lr}"
        )));
    }
    if max_epochs == 0 {
        return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
    }
    if data.num_features() != net.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} features, network expects {}",
            data.num_features(),
            net.num_inputs()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut state = Some(AdamState::new(net, lr));
    drive(
        net.clone(),
        max_epochs,
        truth,
        |p| dataset_loss(p, act, data),
        |p, _| {
            let loss = dataset_loss(p, act, data)?;
            order.shuffle(&mut rng);
            let batch = data.permuted(&order);
            let grads = backprop_gradients(p, act, &batch)?;
            let (next, s) = adam_step(p, &grads, state.take().expect("state restored"))?;
            state = Some(s);
            Ok((next, loss))
        },
    )
}
