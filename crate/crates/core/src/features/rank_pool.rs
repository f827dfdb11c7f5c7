//! Rank pooling as a per-channel least-squares trend.
//!
//! The descriptor of a `T x D` window is, for every column, the slope of the
//! best-fit line of the (optionally cumulative-mean smoothed) values against
//! the time index `1..=T`. It summarizes the direction in which the sequence
//! evolves while respecting its order.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sub-window lengths (hours, counted back from the origin) pooled by
/// [`multi_scale_rank_pool`].
pub const RANK_POOL_SCALES: [usize; 5] = [4, 8, 12, 16, 24];
pub const RETRO_ROWS: usize = 24;
pub const RETRO_CHANNELS: usize = 8;
pub const RANK_POOL_DIM: usize = RANK_POOL_SCALES.len() * RETRO_CHANNELS;

pub fn rank_pool(window: &Matrix, smoothing: bool) -> Result<Vec<f64>> {
    let t_len = window.rows();
    if t_len < 2 {
        return Err(Error::Parameter(format!(
            "rank pooling needs at least 2 rows, got {t_len}"
        )));
    }
    if !window.is_finite() {
        return Err(Error::NonFinite("rank pooling window".into()));
    }
    let mut column = vec![0.0; t_len];
    Ok((0..window.cols())
        .map(|d| {
            for (t, v) in column.iter_mut().enumerate() {
                *v = window.get(t, d);
            }
            if smoothing {
                cumulative_mean(&mut column);
            }
            trend_slope(&column)
        })
        .collect())
}

/// Replaces each value by the mean of all values up to and including it.
fn cumulative_mean(values: &mut [f64]) {
    let mut mean = 0.0;
    for (t, v) in values.iter_mut().enumerate() {
        mean += (*v - mean) / (t + 1) as f64;
        *v = mean;
    }
}

/// OLS slope of `values[t]` on `t`.
///
/// Uses `sum_t (t - tbar) v_t / sum_t (t - tbar)^2`, pairing `t` with its
/// mirror `T + 1 - t` so the numerator is a sum of `(t - tbar)(v_t - v_mirror)`
/// terms. Reversing time then negates the result bit-for-bit.
fn trend_slope(values: &[f64]) -> f64 {
    let n = values.len();
    let tbar = (n as f64 + 1.0) / 2.0;
    let mut num = 0.0;
    for i in 0..n / 2 {
        num += (i as f64 + 1.0 - tbar) * (values[i] - values[n - 1 - i]);
    }
    let denom = (n as f64) * ((n * n) as f64 - 1.0) / 12.0;
    num / denom
}

/// Rank-pools the last `s` rows for each `s` in [`RANK_POOL_SCALES`] and
/// concatenates the results, channel-major within each scale.
pub fn multi_scale_rank_pool(retro: &Matrix, smoothing: bool) -> Result<Vec<f64>> {
    if retro.shape() != (RETRO_ROWS, RETRO_CHANNELS) {
        return Err(Error::Shape(format!(
            "multi-scale rank pooling expects a {RETRO_ROWS}x{RETRO_CHANNELS} window, got {}x{}",
            retro.rows(),
            retro.cols()
        )));
    }
    let mut out = Vec::with_capacity(RANK_POOL_DIM);
    for s in RANK_POOL_SCALES {
        out.extend(rank_pool(
            &retro.slice_rows(RETRO_ROWS - s, RETRO_ROWS),
            smoothing,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_window(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_window_is_zero() {
        let w = Matrix::filled(24, 8, 3.3);
        assert_eq!(rank_pool(&w, true).unwrap(), vec![0.0; 8]);
        assert_eq!(rank_pool(&w, false).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn exact_line_without_smoothing() {
        for (t_len, a) in [(4, 3.0), (7, -2.0), (24, 0.5)] {
            let v: Vec<f64> = (1..=t_len).map(|t| a * t as f64).collect();
            assert_eq!(rank_pool(&column_window(&v), false).unwrap(), vec![a]);
        }
    }

    #[test]
    fn smoothed_line_has_half_slope() {
        // Cumulative mean of a*t is a*(t+1)/2, a line of slope a/2.
        let v: Vec<f64> = (1..=24).map(|t| 2.0 * t as f64).collect();
        let got = rank_pool(&column_window(&v), true).unwrap()[0];
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversal_negates_exactly() {
        let v: Vec<f64> = (0..13).map(|t| ((t * t) as f64 * 0.37).sin()).collect();
        let r: Vec<f64> = v.iter().rev().copied().collect();
        let a = rank_pool(&column_window(&v), false).unwrap()[0];
        let b = rank_pool(&column_window(&r), false).unwrap()[0];
        assert_eq!(a, -b);
    }

    #[test]
    fn too_short_or_non_finite_is_an_error() {
        assert!(rank_pool(&column_window(&[1.0]), false).is_err());
        assert!(rank_pool(&column_window(&[1.0, f64::INFINITY]), false).is_err());
    }

    #[test]
    fn multi_scale_line_in_first_channel() {
        let mut w = Matrix::zeros(24, 8);
        for t in 0..24 {
            w.set(t, 0, t as f64);
        }
        let d = multi_scale_rank_pool(&w, false).unwrap();
        assert_eq!(d.len(), 40);
        for (i, v) in d.iter().enumerate() {
            assert_eq!(*v, if i % 8 == 0 { 1.0 } else { 0.0 }, "position {i}");
        }
    }

    #[test]
    fn multi_scale_rejects_wrong_shape() {
        assert!(multi_scale_rank_pool(&Matrix::zeros(23, 8), true).is_err());
        assert!(multi_scale_rank_pool(&Matrix::zeros(24, 7), true).is_err());
    }
}
