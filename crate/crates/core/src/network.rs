//! Scalar-output feedforward networks: parameters, the invertible activation,
//! the forward pass and the training loss.
//!
//! A neuron's total input is `sum_j w_jk h_j - b_k`: the stored bias is
//! subtracted, so printed parameter sets with that convention load verbatim.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Default inward clipping applied before inverting at the range boundary.
pub const DEFAULT_CLIP_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationKind {
    #[default]
    Tanh,
}

/// An invertible, strictly increasing activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub clip_margin: f64,
}

impl Default for Activation {
    fn default() -> Self {
        Self::tanh()
    }
}

impl Activation {
    pub fn tanh() -> Self {
        Self {
            kind: ActivationKind::Tanh,
            clip_margin: DEFAULT_CLIP_MARGIN,
        }
    }

    /// Open output range `(lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        match self.kind {
            ActivationKind::Tanh => (-1.0, 1.0),
        }
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Tanh => z.tanh(),
        }
    }

    /// Inverse activation; values at or past the range limits are first pulled
    /// inside by `clip_margin`.
    pub fn invert(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput("activation inverse argument"));
        }
        Ok(self.invert_clipped(v))
    }

    #[inline]
    pub(crate) fn invert_clipped(&self, v: f64) -> f64 {
        let (lo, hi) = self.range();
        let v = v.clamp(lo + self.clip_margin, hi - self.clip_margin);
        match self.kind {
            ActivationKind::Tanh => v.atanh(),
        }
    }

    /// `f'(I)` expressed through the output `h = f(I)`.
    #[inline]
    pub fn derivative_from_output(&self, h: f64) -> f64 {
        match self.kind {
            ActivationKind::Tanh => 1.0 - h * h,
        }
    }

    /// Derivative at total input `z`.
    pub fn derivative(&self, z: f64) -> f64 {
        self.derivative_from_output(self.apply(z))
    }
}

/// One dense layer: `weights` is `fan_in x fan_out`, `biases` has `fan_out` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Matrix::zeros(fan_in, fan_out),
            biases: vec![0.0; fan_out],
        }
    }

    /// Total input of every neuron for every sample: `inputs * W - b`.
    pub fn total_input(&self, inputs: &Matrix) -> Matrix {
        debug_assert_eq!(inputs.cols(), self.fan_in());
        let mut z = inputs
            .matmul(&self.weights)
            .expect("layer input width checked by caller");
        for n in 0..z.rows() {
            for (v, b) in z.row_mut(n).iter_mut().zip(&self.biases) {
                *v -= b;
            }
        }
        z
    }
}

/// Weights and biases of a scalar-output feedforward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsDoc", into = "ParamsDoc")]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    /// Validates that consecutive layers chain, the output is scalar and all
    /// values are finite.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::TopologyMismatch("network has no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.fan_in() == 0 || layer.fan_out() == 0 {
                return Err(Error::TopologyMismatch(format!("layer {i} is empty")));
            }
            if layer.biases.len() != layer.fan_out() {
                return Err(Error::TopologyMismatch(format!(
                    "layer {i}: {} biases for fan-out {}",
                    layer.biases.len(),
                    layer.fan_out()
                )));
            }
            if !layer.weights.is_finite() || layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFiniteInput("network parameters"));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::TopologyMismatch(format!(
                    "layer {i} fan-out {} does not match layer {} fan-in {}",
                    pair[0].fan_out(),
                    i + 1,
                    pair[1].fan_in()
                )));
            }
        }
        let last = layers.last().expect("non-empty");
        if last.fan_out() != 1 {
            return Err(Error::TopologyMismatch(format!(
                "output layer has {} neurons, expected 1",
                last.fan_out()
            )));
        }
        Ok(Self { layers })
    }

    /// All-zero parameters for a topology `[inputs, hidden..., 1]`.
    pub fn zeros(topology: &[usize]) -> Result<Self> {
        if topology.len() < 2 {
            return Err(Error::TopologyMismatch(
                "topology needs an input and an output width".into(),
            ));
        }
        Self::new(
            topology
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        )
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn num_inputs(&self) -> usize {
        self.layers[0].fan_in()
    }

    /// Widths `[inputs, hidden..., 1]`.
    pub fn topology(&self) -> Vec<usize> {
        std::iter::once(self.num_inputs())
            .chain(self.layers.iter().map(Layer::fan_out))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.fan_in() * l.fan_out() + l.fan_out())
            .sum()
    }

    /// Parameters flattened layer by layer: the layer's weights in
    /// fan-in-major order, then its biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// Inverse of [`MlpParams::flatten`] for a network of the same topology.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut out = self.clone();
        let mut pos = 0;
        for layer in &mut out.layers {
            let nw = layer.weights.as_slice().len();
            layer
                .weights
                .as_mut_slice()
                .copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = layer.biases.len();
            layer.biases.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.biases.iter().all(|b| b.is_finite()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    layers: Vec<LayerDoc>,
}

impl TryFrom<ParamsDoc> for MlpParams {
    type Error = Error;

    fn try_from(doc: ParamsDoc) -> Result<Self> {
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                Ok(Layer {
                    weights: Matrix::from_rows(&l.weights)?,
                    biases: l.biases,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpParams::new(layers)
    }
}

impl From<MlpParams> for ParamsDoc {
    fn from(p: MlpParams) -> Self {
        ParamsDoc {
            layers: p
                .layers
                .into_iter()
                .map(|l| LayerDoc {
                    weights: l.weights.iter_rows().map(<[f64]>::to_vec).collect(),
                    biases: l.biases,
                })
                .collect(),
        }
    }
}

/// Training inputs (`N x d`) and scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Vec<f64>) -> Result<Self> {
        if inputs.rows() == 0 || inputs.cols() == 0 {
            return Err(Error::DimensionMismatch("dataset has no samples".into()));
        }
        if inputs.rows() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} input rows but {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        if !inputs.is_finite() || targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput("dataset"));
        }
        Ok(Self { inputs, targets })
    }

    /// Checks that every target lies in the closed output range of `act`;
    /// values on the boundary are handled by inverse clipping.
    pub fn check_targets(&self, act: &Activation) -> Result<()> {
        let (lo, hi) = act.range();
        match self.targets.iter().find(|t| **t < lo || **t > hi) {
            Some(t) => Err(Error::InvalidConfig(format!(
                "target {t} lies outside the activation range [{lo}, {hi}]"
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.inputs.cols()
    }

    /// Reorders samples by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let inputs = Matrix::from_fn(self.len(), self.num_features(), |i, j| {
            self.inputs[(order[i], j)]
        });
        let targets = order.iter().map(|&i| self.targets[i]).collect();
        Self { inputs, targets }
    }
}

/// Per-sample activations of every hidden layer (`N x width` each); the
/// output layer is not included.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub activations: Vec<Matrix>,
}

fn check_inputs(net: &MlpParams, inputs: &Matrix) -> Result<()> {
    if inputs.cols() != net.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "inputs have {} columns, network expects {}",
            inputs.cols(),
            net.num_inputs()
        )));
    }
    if !inputs.is_finite() {
        return Err(Error::NonFiniteInput("network inputs"));
    }
    Ok(())
}

/// Runs the network layer by layer, returning hidden activations and predictions.
pub fn forward_pass(
    net: &MlpParams,
    act: &Activation,
    inputs: &Matrix,
) -> Result<(HiddenState, Vec<f64>)> {
    check_inputs(net, inputs)?;
    let (hidden, output) = net.layers.split_at(net.layers.len() - 1);
    let mut activations = Vec::with_capacity(hidden.len());
    for layer in hidden {
        let below = activations.last().unwrap_or(inputs);
        let h = layer.total_input(below).map(|z| act.apply(z));
        activations.push(h);
    }
    let below = activations.last().unwrap_or(inputs);
    let predictions = output[0].total_input(below).map(|z| act.apply(z));
    Ok((HiddenState { activations }, predictions.col(0)))
}

/// Predictions only.
pub fn predict(net: &MlpParams, act: &Activation, inputs: &Matrix) -> Result<Vec<f64>> {
    forward_pass(net, act, inputs).map(|(_, p)| p)
}

/// Mean squared error `(1/N) sum (p - y)^2`.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::DimensionMismatch("empty prediction vector".into()));
    }
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sse / predictions.len() as f64)
}

/// Full-batch MSE of `net` on `data`.
pub fn dataset_loss(net: &MlpParams, act: &Activation, data: &Dataset) -> Result<f64> {
    mse_loss(&predict(net, act, &data.inputs)?, &data.targets)
}
