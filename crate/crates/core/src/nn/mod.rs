//! Small dense networks trained from scratch: MLP, LSTM and MLP-Mixer, with
//! Adam, early stopping and a binary model format.

pub mod activation;
pub mod adam;
pub mod lstm;
pub mod mixer;
pub mod mlp;
pub mod model;
pub mod network;
pub mod train;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use activation::Activation;
pub use adam::{adam_step, AdamConfig, AdamState};
pub use lstm::{lstm_forward, lstm_step, CellActivation, Lstm, LstmStep};
pub use mixer::{mixer_forward, Mixer, MixerConfig};
pub use mlp::{mlp_forward, DenseLayer, Mlp};
pub use model::{load, save, TrainedModel, TrainedNetwork, FORMAT_VERSION, MAGIC};
pub use network::{ArchSpec, Network};
pub use train::{train, EarlyStopping, PatienceUnit, TrainConfig, TrainReport};

/// Uniform access to a model's parameter tensors, in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
    /// `(rows, cols)` of every tensor, vectors as `(len, 1)`.
    fn shapes(&self) -> Vec<(usize, usize)>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Fills `values` from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn init_uniform(values: &mut [f64], fan_in: usize, rng: &mut impl Rng) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in values {
        *v = rng.gen_range(-bound..bound);
    }
}

/// Mean squared error over every element of `pred` and its gradient.
pub fn mse_grad(pred: &Matrix, y: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "prediction is {}x{} but target is {}x{}",
            pred.rows(),
            pred.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let n = pred.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyDataset("empty batch".into()));
    }
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    let scale = 2.0 / n as f64;
    for ((g, p), t) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice())
        .zip(y.as_slice())
    {
        let d = p - t;
        loss += d * d;
        *g = scale * d;
    }
    let loss = loss / n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss}")));
    }
    Ok((loss, grad))
}

/// Mean squared error without the gradient.
pub fn mse(pred: &Matrix, y: &Matrix) -> Result<f64> {
    mse_grad(pred, y).map(|(l, _)| l)
}
