use crate::harness::param_abs_error;
use crate::{MlpParams, Result};

/// Per-epoch record of one training run.
///
/// `losses[e]` is the full-batch MSE at the start of epoch `e`; the final
/// entry is the loss after the last epoch, so a completed run has
/// `epochs + 1` entries. A run that hits a non-finite loss or a numerical
/// failure is stopped, `diverged_at` records that epoch, and the remaining
/// entries are filled with NaN.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
    pub param_abs_errors: Option<Vec<f64>>,
    pub diverged_at: Option<usize>,
}

impl TrainTrace {
    pub(crate) fn with_capacity(epochs: usize, track_params: bool) -> Self {
        Self {
            losses: Vec::with_capacity(epochs + 1),
            param_abs_errors: track_params.then(|| Vec::with_capacity(epochs + 1)),
            diverged_at: None,
        }
    }

    pub(crate) fn record(&mut self, loss: f64, param_error: Option<f64>) {
        self.losses.push(loss);
        if let (Some(errs), Some(e)) = (self.param_abs_errors.as_mut(), param_error) {
            errs.push(e);
        }
    }

    /// Marks the run as failed at `epoch` and pads to `epochs + 1` entries.
    pub(crate) fn mark_diverged(&mut self, epoch: usize, epochs: usize) {
        self.diverged_at.get_or_insert(epoch);
        self.losses.resize(epochs + 1, f64::NAN);
        if let Some(errs) = self.param_abs_errors.as_mut() {
            errs.resize(epochs + 1, f64::NAN);
        }
    }

    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(f64::NAN)
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn epochs(&self) -> usize {
        self.losses.len().saturating_sub(1)
    }
}

/// Shared outer loop for the trainers.
///
/// `epoch` maps the current parameters to the next ones and returns the
/// pre-update loss. Numerical failures and non-finite losses end the run as
/// diverged instead of surfacing as errors; other errors propagate.
pub(crate) fn drive(
    mut net: MlpParams,
    epochs: usize,
    truth: Option<&MlpParams>,
    loss_at: impl Fn(&MlpParams) -> Result<f64>,
    mut epoch: impl FnMut(&MlpParams, usize) -> Result<(MlpParams, f64)>,
) -> Result<(MlpParams, TrainTrace)> {
    let param_error = |p: &MlpParams| truth.map(|t| param_abs_error(p, t)).transpose();
    let mut trace = TrainTrace::with_capacity(epochs, truth.is_some());
    for e in 0..epochs {
        let perr = param_error(&net)?;
        match epoch(&net, e) {
            Ok((next, loss)) => {
                trace.record(loss, perr);
                if !loss.is_finite() {
                    trace.mark_diverged(e, epochs);
                    return Ok((net, trace));
                }
                net = next;
            }
            Err(err) if err.is_numerical() => {
                trace.record(loss_at(&net).unwrap_or(f64::NAN), perr);
                trace.mark_diverged(e, epochs);
                return Ok((net, trace));
            }
            Err(err) => return Err(err),
        }
    }
    let loss = loss_at(&net).unwrap_or(f64::NAN);
    trace.record(loss, param_error(&net)?);
    if !loss.is_finite() {
        trace.mark_diverged(epochs, epochs);
    }
    Ok((net, trace))
}
