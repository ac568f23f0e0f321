//! Iterative linear least squares (ILLS) training.
//!
//! Every neuron's total input is linear in both the activations of the layer
//! below and in its own weights and bias. An epoch works backwards from the
//! output:
//!
//! 1. Forward pass to get hidden activation estimates `h` for every sample.
//! 2. Refit the output layer by least squares against `H = f^-1(y)`.
//! 3. For each hidden layer, top-down, and for each neuron `k` of the layer
//!    above: linearise the layer's activations in small deviations of its own
//!    weights and biases, solve for the deviations that best remove the
//!    residual at `k`, and move `h` a normalised step of size `rho` along the
//!    implied change.
//! 4. Refit the layer's parameters so that its inputs reproduce `f^-1(h)`.
//!
//! Parameters are always set by regression; only the hidden activations are
//! moved in small steps.

use crate::linalg::{lstsq, Matrix};
use crate::network::{dataset_loss, forward_pass, Activation, Dataset, Layer, MlpParams};
use crate::trace::drive;
use crate::{Error, Result, TrainTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IllsConfig {
    /// Step size for hidden activation updates, in `(0, 1]`.
    pub rho: f64,
    pub max_epochs: usize,
    /// Lower bound on the step normaliser. At the default of 1 the step only
    /// ever shrinks an update; it never inflates a vanishing one to size `rho`.
    pub norm_floor: f64,
    /// Updated activations are kept within `[-1 + m, 1 - m]`.
    pub clamp_margin: f64,
}

impl Default for IllsConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            max_epochs: 10_000,
            norm_floor: 1.0,
            clamp_margin: 1e-6,
        }
    }
}

impl IllsConfig {
    pub fn new(rho: f64, max_epochs: usize) -> Self {
        Self {
            rho,
            max_epochs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !(self.norm_floor.is_finite() && self.norm_floor > 0.0) {
            return Err(Error::InvalidConfig("norm_floor must be positive".into()));
        }
        if !(self.clamp_margin > 0.0 && self.clamp_margin < 1.0) {
            return Err(Error::InvalidConfig(
                "clamp_margin must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Proposed deviations of one layer's weights (`alphas`, `fan_in x width`)
/// and biases (`betas`).
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSolution {
    pub alphas: Matrix,
    pub betas: Vec<f64>,
}

/// Least-squares fit of a whole layer, with one residual norm per neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFit {
    pub layer: Layer,
    pub residual_norms: Vec<f64>,
}

/// Element-wise inverse activation: the total input each value requires.
pub fn required_input_targets(act: &Activation, values: &[f64]) -> Result<Vec<f64>> {
    values.iter().map(|&v| act.invert(v)).collect()
}

fn required_inputs_matrix(act: &Activation, h: &Matrix) -> Result<Matrix> {
    if !h.is_finite() {
        return Err(Error::NonFiniteInput("hidden activations"));
    }
    Ok(h.map(|v| act.invert_clipped(v)))
}

/// Regresses each column of `required_inputs` on `[h_prev | -1]`, giving
/// the weights and (subtracted) biases of a layer.
pub fn fit_layer_params(h_prev: &Matrix, required_inputs: &Matrix) -> Result<LayerFit> {
    let (n, fan_in) = h_prev.shape();
    if required_inputs.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} activation rows but {} target rows",
            required_inputs.rows()
        )));
    }
    let design = Matrix::from_fn(n, fan_in + 1, |i, j| {
        if j < fan_in {
            h_prev[(i, j)]
        } else {
            -1.0
        }
    });
    let fan_out = required_inputs.cols();
    let mut layer = Layer::zeros(fan_in, fan_out);
    let mut residual_norms = Vec::with_capacity(fan_out);
    for k in 0..fan_out {
        let sol = lstsq(&design, &required_inputs.col(k))?;
        for j in 0..fan_in {
            layer.weights[(j, k)] = sol.coefficients[j];
        }
        layer.biases[k] = sol.coefficients[fan_in];
        residual_norms.push(sol.residual_norm);
    }
    Ok(LayerFit {
        layer,
        residual_norms,
    })
}

/// Linearised system for the deviations of one layer's parameters.
///
/// Row `n` expresses `sum_j w_next[j] * dh(n, j) = residual[n]` where
/// `dh(n, j) = f'(I_nj) * (h_below(n, .) . alpha_j - beta_j)`. Unknowns are
/// ordered neuron by neuron: the `fan_in` alphas of neuron `j`, then `beta_j`.
pub fn build_deviation_system(
    h_below: &Matrix,
    h_layer: &Matrix,
    next_weights_column: &[f64],
    residual: &[f64],
    act: &Activation,
) -> Result<(Matrix, Vec<f64>)> {
    let (n, fan_in) = h_below.shape();
    let width = h_layer.cols();
    if h_layer.rows() != n || residual.len() != n || next_weights_column.len() != width {
        return Err(Error::DimensionMismatch(format!(
            "deviation system: h_below {n}x{fan_in}, h_layer {}x{width}, \
             {} next weights, {} residuals",
            h_layer.rows(),
            next_weights_column.len(),
            residual.len()
        )));
    }
    let block = fan_in + 1;
    let mut a = Matrix::zeros(n, width * block);
    for s in 0..n {
        let below = h_below.row(s);
        let row = a.row_mut(s);
        for j in 0..width {
            let scale = next_weights_column[j] * act.derivative_from_output(h_layer[(s, j)]);
            let cols = &mut row[j * block..(j + 1) * block];
            for (c, h) in cols.iter_mut().zip(below) {
                *c = scale * h;
            }
            cols[fan_in] = -scale;
        }
    }
    Ok((a, residual.to_vec()))
}

/// Minimum-norm solve of a deviation system built for a layer of
/// `width` neurons with `fan_in` inputs each.
pub fn solve_deviations(
    a: &Matrix,
    b: &[f64],
    fan_in: usize,
    width: usize,
) -> Result<DeviationSolution> {
    if a.cols() != width * (fan_in + 1) {
        return Err(Error::DimensionMismatch(format!(
            "{} unknowns for a {fan_in}-input layer of width {width}",
            a.cols()
        )));
    }
    let sol = lstsq(a, b)?;
    let block = fan_in + 1;
    let mut alphas = Matrix::zeros(fan_in, width);
    let mut betas = vec![0.0; width];
    for j in 0..width {
        for i in 0..fan_in {
            alphas[(i, j)] = sol.coefficients[j * block + i];
        }
        betas[j] = sol.coefficients[j * block + fan_in];
    }
    Ok(DeviationSolution { alphas, betas })
}

/// Linearised change in each activation caused by the deviations.
pub fn deviations_to_delta_h(
    dev: &DeviationSolution,
    h_below: &Matrix,
    h_layer: &Matrix,
    act: &Activation,
) -> Result<Matrix> {
    let (n, fan_in) = h_below.shape();
    let width = h_layer.cols();
    if h_layer.rows() != n || dev.alphas.shape() != (fan_in, width) || dev.betas.len() != width {
        return Err(Error::DimensionMismatch(format!(
            "deviations {}x{} / {} betas for h_below {n}x{fan_in}, h_layer {}x{width}",
            dev.alphas.rows(),
            dev.alphas.cols(),
            dev.betas.len(),
            h_layer.rows()
        )));
    }
    let mut delta = Matrix::zeros(n, width);
    for s in 0..n {
        let below = h_below.row(s);
        for j in 0..width {
            let mut lin = 0.0;
            for (i, h) in below.iter().enumerate() {
                lin += h * dev.alphas[(i, j)];
            }
            lin -= dev.betas[j];
            delta[(s, j)] = act.derivative_from_output(h_layer[(s, j)]) * lin;
        }
    }
    Ok(delta)
}

/// Normalised step on the hidden activations.
///
/// The whole `delta_h` matrix is divided by one shared constant, its largest
/// absolute entry (floored at `norm_floor`), so the step is at most `rho` per
/// entry. Results are clamped to `[-1 + clamp_margin, 1 - clamp_margin]`.
pub fn apply_hidden_update(
    h_layer: &Matrix,
    delta_h: &Matrix,
    rho: f64,
    norm_floor: f64,
    clamp_margin: f64,
) -> Result<Matrix> {
    if h_layer.shape() != delta_h.shape() {
        return Err(Error::DimensionMismatch(format!(
            "activations {:?} vs update {:?}",
            h_layer.shape(),
            delta_h.shape()
        )));
    }
    let divisor = delta_h.max_abs().max(norm_floor);
    let limit = 1.0 - clamp_margin;
    let mut out = h_layer.clone();
    for (h, d) in out.as_mut_slice().iter_mut().zip(delta_h.as_slice()) {
        *h = (*h + rho * d / divisor).clamp(-limit, limit);
    }
    Ok(out)
}

/// Residual of destination neuron `k`: required input minus current input.
fn destination_residual(target: &Matrix, k: usize, h: &Matrix, layer: &Layer) -> Vec<f64> {
    (0..h.rows())
        .map(|s| {
            let mut input = 0.0;
            for (j, hv) in h.row(s).iter().enumerate() {
                input += hv * layer.weights[(j, k)];
            }
            input -= layer.biases[k];
            target[(s, k)] - input
        })
        .collect()
}

/// One full ILLS epoch. Returns the updated parameters and the loss measured
/// by the forward pass before any update.
pub fn run_epoch(
    net: &MlpParams,
    act: &Activation,
    data: &Dataset,
    cfg: &IllsConfig,
) -> Result<(MlpParams, f64)> {
    let (hidden, predictions) = forward_pass(net, act, &data.inputs)?;
    let loss = crate::network::mse_loss(&predictions, &data.targets)?;
    let mut hs = hidden.activations;
    let mut next = net.clone();
    let depth = next.layers().len();

    // Output layer against H = f^-1(y).
    let output_target = Matrix::column(&required_input_targets(act, &data.targets)?);
    let below_output = hs.last().unwrap_or(&data.inputs);
    next.layers_mut()[depth - 1] = fit_layer_params(below_output, &output_target)?.layer;

    // Hidden layers top-down; `li` indexes the layer of weights that produces hs[li].
    for li in (0..depth - 1).rev() {
        let target_above = if li + 1 == depth - 1 {
            output_target.clone()
        } else {
            required_inputs_matrix(act, &hs[li + 1])?
        };
        let (lower, upper) = hs.split_at_mut(li);
        let h_layer = &mut upper[0];
        let h_below = lower.last().unwrap_or(&data.inputs);
        let fan_in = h_below.cols();
        let width = h_layer.cols();
        let above = &next.layers()[li + 1];

        for k in 0..above.fan_out() {
            let residual = destination_residual(&target_above, k, h_layer, above);
            let w_col = above.weights.col(k);
            let (a, b) = build_deviation_system(h_below, h_layer, &w_col, &residual, act)?;
            let dev = solve_deviations(&a, &b, fan_in, width)?;
            let delta = deviations_to_delta_h(&dev, h_below, h_layer, act)?;
            *h_layer =
                apply_hidden_update(h_layer, &delta, cfg.rho, cfg.norm_floor, cfg.clamp_margin)?;
        }

        let required = required_inputs_matrix(act, h_layer)?;
        next.layers_mut()[li] = fit_layer_params(h_below, &required)?.layer;
    }

    if !next.is_finite() {
        return Err(Error::NonFiniteInput("updated parameters"));
    }
    Ok((next, loss))
}

fn check_shapes(net: &MlpParams, data: &Dataset) -> Result<()> {
    if data.num_features() != net.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} features, network expects {}",
            data.num_features(),
            net.num_inputs()
        )));
    }
    Ok(())
}

/// Runs `cfg.max_epochs` ILLS epochs.
pub fn train_ills(
    net: &MlpParams,
    act: &Activation,
    data: &Dataset,
    cfg: &IllsConfig,
) -> Result<(MlpParams, TrainTrace)> {
    train_ills_tracked(net, act, data, cfg, None)
}

/// As [`train_ills`], additionally recording the absolute-value parameter
/// error against `truth` at every epoch.
pub fn train_ills_tracked(
    net: &MlpParams,
    act: &Activation,
    data: &Dataset,
    cfg: &IllsConfig,
    truth: Option<&MlpParams>,
) -> Result<(MlpParams, TrainTrace)> {
    cfg.validate()?;
    check_shapes(net, data)?;
    drive(
        net.clone(),
        cfg.max_epochs,
        truth,
        |p| dataset_loss(p, act, data),
        |p, _| run_epoch(p, act, data, cfg),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
    }

    #[test]
    fn required_inputs_examples() {
        let act = Activation::tanh();
        assert_eq!(
            required_input_targets(&act, &[0.0; 4]).unwrap(),
            vec![0.0; 4]
        );
        let c = 0.37_f64;
        for v in required_input_targets(&act, &[c.tanh(); 3]).unwrap() {
            assert_abs_diff_eq!(v, c, epsilon = 1e-12);
        }
        let clipped = required_input_targets(&act, &[1.0]).unwrap()[0];
        assert_abs_diff_eq!(clipped, 0.5 * (1.999999_f64 / 1e-6).ln(), epsilon = 1e-9);
    }

    #[test]
    fn fit_recovers_generating_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random(&mut rng, 40, 3, 1.0);
        let w0 = random(&mut rng, 3, 2, 2.0);
        let b0 = [0.3, -0.7];
        let mut req = h.matmul(&w0).unwrap();
        for s in 0..40 {
            for k in 0..2 {
                req[(s, k)] -= b0[k];
            }
        }
        let fit = fit_layer_params(&h, &req).unwrap();
        for (a, b) in fit.layer.weights.as_slice().iter().zip(w0.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        for (a, b) in fit.layer.biases.iter().zip(b0) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn fit_with_zero_inputs_uses_bias_only() {
        let fit = fit_layer_params(&Matrix::zeros(5, 2), &Matrix::column(&[0.4; 5])).unwrap();
        assert!(fit.layer.weights.as_slice().iter().all(|w| w.abs() < 1e-14));
        assert_abs_diff_eq!(fit.layer.biases[0], -0.4, epsilon = 1e-14);
    }

    #[test]
    fn fit_single_sample_interpolates() {
        let h = Matrix::from_rows(&[[0.2, -0.6, 0.9]]).unwrap();
        let fit = fit_layer_params(&h, &Matrix::column(&[1.3])).unwrap();
        assert!(fit.residual_norms[0] < 1e-12);
    }

    #[test]
    fn deviation_system_shape_and_saturation() {
        let act = Activation::tanh();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h_below = random(&mut rng, 10, 2, 1.0);
        let h_layer = random(&mut rng, 10, 2, 0.9);
        let (a, _) =
            build_deviation_system(&h_below, &h_layer, &[1.0, -1.0], &[0.0; 10], &act).unwrap();
        assert_eq!(a.cols(), 6);

        let h_sat = Matrix::from_rows(&[[1.0, 0.3]]).unwrap();
        let below = Matrix::from_rows(&[[0.5, -0.5]]).unwrap();
        let (a, _) = build_deviation_system(&below, &h_sat, &[2.0, 2.0], &[0.1], &act).unwrap();
        assert_eq!(&a.row(0)[..3], &[0.0, 0.0, 0.0]);
        assert!(a.row(0)[3..].iter().all(|v| *v != 0.0));

        assert!(build_deviation_system(&below, &h_sat, &[1.0], &[0.1], &act).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_deviation() {
        let act = Activation::tanh();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h_below = random(&mut rng, 12, 3, 1.0);
        let h_layer = random(&mut rng, 12, 2, 0.9);
        let (a, b) =
            build_deviation_system(&h_below, &h_layer, &[0.7, 1.1], &[0.0; 12], &act).unwrap();
        let dev = solve_deviations(&a, &b, 3, 2).unwrap();
        assert!(dev.alphas.as_slice().iter().all(|v| *v == 0.0));
        assert!(dev.betas.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn delta_h_examples() {
        let act = Activation::tanh();
        let below = Matrix::from_rows(&[[0.5, -0.25], [1.0, 0.0]]).unwrap();
        let zero = DeviationSolution {
            alphas: Matrix::zeros(2, 2),
            betas: vec![0.0, 0.0],
        };
        let h = Matrix::zeros(2, 2);
        let d = deviations_to_delta_h(&zero, &below, &h, &act).unwrap();
        assert!(d.as_slice().iter().all(|v| *v == 0.0));

        let betas_only = DeviationSolution {
            alphas: Matrix::zeros(2, 2),
            betas: vec![1.0, 1.0],
        };
        let d = deviations_to_delta_h(&betas_only, &below, &h, &act).unwrap();
        assert!(d.as_slice().iter().all(|v| *v == -1.0));

        let sat = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let d = deviations_to_delta_h(&betas_only, &below, &sat, &act).unwrap();
        assert_eq!(d.col(0), vec![0.0, 0.0]);
    }

    #[test]
    fn update_arithmetic() {
        let h = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let d = Matrix::from_rows(&[[0.5, -2.0]]).unwrap();
        let out = apply_hidden_update(&h, &d, 0.1, 1e-12, 1e-6).unwrap();
        assert_abs_diff_eq!(out[(0, 0)], 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(out[(0, 1)], -0.1, epsilon = 1e-15);

        let h = Matrix::from_rows(&[[0.3, -0.2], [0.1, 0.9]]).unwrap();
        assert_eq!(
            apply_hidden_update(&h, &Matrix::zeros(2, 2), 0.1, 1e-12, 1e-6).unwrap(),
            h
        );
        assert!(apply_hidden_update(&h, &d, 0.1, 1e-12, 1e-6).is_err());
        let full = Matrix::from_rows(&[[1.0, -1.0], [0.5, 0.5]]).unwrap();
        assert_eq!(apply_hidden_update(&h, &full, 0.0, 1e-12, 1e-6).unwrap(), h);
    }

    #[test]
    fn config_validation() {
        assert!(IllsConfig::new(0.1, 10).validate().is_ok());
        assert!(IllsConfig::new(0.0, 10).validate().is_err());
        assert!(IllsConfig::new(1.5, 10).validate().is_err());
        assert!(IllsConfig::new(0.1, 0).validate().is_err());
    }

    proptest! {
        #[test]
        fn linearised_residual_does_not_increase(seed in any::<u64>()) {
            // A tiny step along the solved direction cannot increase the
            // linearised residual, since lstsq minimises it.
            let act = Activation::tanh();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 20;
            let h_below = random(&mut rng, n, 3, 1.0);
            let h_layer = random(&mut rng, n, 2, 0.9);
            let w = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let residual: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = build_deviation_system(&h_below, &h_layer, &w, &residual, &act).unwrap();
            let dev = solve_deviations(&a, &b, 3, 2).unwrap();
            let delta = deviations_to_delta_h(&dev, &h_below, &h_layer, &act).unwrap();
            let updated = apply_hidden_update(&h_layer, &delta, 1e-6, 1e-12, 1e-6).unwrap();
            let before: f64 = residual.iter().map(|r| r * r).sum();
            let after: f64 = (0..n)
                .map(|s| {
                    let moved: f64 = (0..2).map(|j| w[j] * (updated[(s, j)] - h_layer[(s, j)])).sum();
                    (residual[s] - moved).powi(2)
                })
                .sum();
            prop_assert!(after <= before);
        }
    }
}
