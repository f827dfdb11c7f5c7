//! Dominant-frequency descriptor of the retrospective window.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::fft::fft_real;
use crate::features::rank_pool::{RETRO_CHANNELS, RETRO_ROWS};
use crate::matrix::Matrix;

pub const SPECTRAL_DIM: usize = 2 * RETRO_CHANNELS;

/// Bins whose magnitude is below this fraction of `sum |x_t|` are treated as
/// exactly zero (rounding residue of the transform).
const ZERO_BIN_RTOL: f64 = 1e-12;

/// The strongest non-DC bin of a real signal's one-sided spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominantBin {
    pub bin: usize,
    pub magnitude: f64,
    /// In `(-pi, pi]`; 0 when the magnitude is 0.
    pub phase: f64,
}

/// Selects `argmax_{k in 1..=N/2} |X[k]|`, ties going to the lowest `k`.
pub fn dominant_bin(signal: &[f64]) -> Result<DominantBin> {
    if signal.len() < 2 {
        return Err(Error::Parameter(
            "spectral descriptor needs at least 2 samples".into(),
        ));
    }
    let spectrum = fft_real(signal)?;
    let tol = ZERO_BIN_RTOL * signal.iter().map(|v| v.abs()).sum::<f64>();
    let mut best = DominantBin {
        bin: 1,
        magnitude: 0.0,
        phase: 0.0,
    };
    for (k, z) in spectrum
        .iter()
        .enumerate()
        .take(signal.len() / 2 + 1)
        .skip(1)
    {
        let mag = z.norm();
        if mag > tol && mag > best.magnitude {
            let mut phase = z.im.atan2(z.re);
            if phase <= -PI {
                phase = PI;
            }
            best = DominantBin {
                bin: k,
                magnitude: mag,
                phase,
            };
        }
    }
    Ok(best)
}

/// Per channel `(magnitude, phase)` of the dominant bin, channel-major.
pub fn spectral_features(retro: &Matrix) -> Result<Vec<f64>> {
    if retro.shape() != (RETRO_ROWS, RETRO_CHANNELS) {
        return Err(Error::Shape(format!(
            "spectral features expect a {RETRO_ROWS}x{RETRO_CHANNELS} window, got {}x{}",
            retro.rows(),
            retro.cols()
        )));
    }
    let mut out = Vec::with_capacity(SPECTRAL_DIM);
    for c in 0..retro.cols() {
        let d = dominant_bin(&retro.column(c))?;
        out.push(d.magnitude);
        out.push(d.phase);
    }
    Ok(out)
}
