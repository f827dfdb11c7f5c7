//! Reference forecasts that need no training.

use crate::ingest::Channel;
use crate::matrix::Matrix;
use crate::preprocess::WindowedDataset;

/// Repeats the WS10mi value observed at each origin for every horizon;
/// `horizons x n`.
pub fn persistence_baseline(ds: &WindowedDataset) -> Matrix {
    let col = Channel::Ws10mi.index();
    let mut out = Matrix::zeros(ds.spec.horizons, ds.len());
    for (j, s) in ds.samples.iter().enumerate() {
        let last = s.input.get(s.input.rows() - 1, col);
        for h in 0..ds.spec.horizons {
            out.set(h, j, last);
        }
    }
    out
}

/// Per-horizon mean of the `fit` targets, repeated for every sample of `ds`.
pub fn mean_baseline(fit: &WindowedDataset, ds: &WindowedDataset) -> Matrix {
    let t = fit.targets();
    let mut out = Matrix::zeros(ds.spec.horizons, ds.len());
    for h in 0..out.rows() {
        let mean = t.row(h).iter().sum::<f64>() / t.cols() as f64;
        out.row_mut(h).fill(mean);
    }
    out
}
