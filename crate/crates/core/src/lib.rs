//! Training scalar-output feedforward networks with invertible activations by
//! iterative linear least squares (ILLS), alongside a backpropagation + Adam
//! baseline and the experiment harness used to compare them.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense matrices and the minimum-norm least-squares solve.
//! - [`network`]: parameters, the tanh activation, forward pass and MSE.
//! - [`ills`]: the alternating least-squares training algorithm.
//! - [`baseline`]: reverse-mode gradients and the Adam optimiser.
//! - [`datagen`]: initialisation schemes, synthetic presets and the airline series.
//! - [`harness`]: grid sweeps, aggregation, CSV and SVG output.

pub mod baseline;
pub mod datagen;
mod error;
pub mod harness;
pub mod ills;
pub mod linalg;
pub mod network;
mod trace;

pub use error::{Error, Result};
pub use linalg::{LeastSquaresSolution, Matrix};
pub use network::{Activation, Dataset, HiddenState, MlpParams};
pub use trace::TrainTrace;
