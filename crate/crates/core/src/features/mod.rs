//! Local (rank-pooling) and global (spectral) descriptors, and assembly of
//! model input vectors.

pub mod fft;
pub mod rank_pool;
pub mod spectral;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{Channel, NUM_CHANNELS, TIMESTAMP_FORMAT};
use crate::matrix::Matrix;
use crate::metrics::fmt_value;
use crate::preprocess::{fit_normalizer, NormKind, Normalizer, Sample, WindowedDataset};

pub use fft::{fft, fft_real, ifft};
pub use rank_pool::{
    multi_scale_rank_pool, rank_pool, RANK_POOL_DIM, RANK_POOL_SCALES, RETRO_ROWS,
};
pub use spectral::{dominant_bin, spectral_features, DominantBin, SPECTRAL_DIM};

/// Which descriptors are appended to the raw input window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSet {
    Raw,
    Fft,
    Rp,
    FftRp,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Raw,
        FeatureSet::Fft,
        FeatureSet::Rp,
        FeatureSet::FftRp,
    ];

    pub fn uses_fft(self) -> bool {
        matches!(self, FeatureSet::Fft | FeatureSet::FftRp)
    }

    pub fn uses_rp(self) -> bool {
        matches!(self, FeatureSet::Rp | FeatureSet::FftRp)
    }

    /// Length of the descriptor block that follows the raw window.
    pub fn descriptor_dim(self) -> usize {
        SPECTRAL_DIM * usize::from(self.uses_fft()) + RANK_POOL_DIM * usize::from(self.uses_rp())
    }

    pub fn input_dim(self, lookback: usize) -> usize {
        NUM_CHANNELS * lookback + self.descriptor_dim()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Raw => "RAW",
            FeatureSet::Fft => "FFT",
            FeatureSet::Rp => "RP",
            FeatureSet::FftRp => "FFT+RP",
        })
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(FeatureSet::Raw),
            "fft" => Ok(FeatureSet::Fft),
            "rp" => Ok(FeatureSet::Rp),
            "fft+rp" | "fft-rp" | "both" => Ok(FeatureSet::FftRp),
            _ => Err(Error::Parameter(format!("unknown feature set `{s}`"))),
        }
    }
}

/// Normalizers that turn a raw [`Sample`] into model inputs: min-max for the
/// raw window and the spectral branch, z-score for rank pooling.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePipeline {
    pub minmax: Normalizer,
    pub zscore: Normalizer,
    /// Cumulative-mean smoothing before rank pooling.
    pub smoothing: bool,
}

impl FeaturePipeline {
    /// Fits both normalizers on `rows` (training rows only).
    pub fn fit(rows: &Matrix) -> Result<Self> {
        if rows.cols() != NUM_CHANNELS {
            return Err(Error::Shape(format!(
                "expected {NUM_CHANNELS} channels, got {}",
                rows.cols()
            )));
        }
        Ok(Self {
            minmax: fit_normalizer(rows, NormKind::MinMax)?,
            zscore: fit_normalizer(rows, NormKind::ZScore)?,
            smoothing: true,
        })
    }

    /// Spectral then rank-pool descriptors, as selected by `set`.
    pub fn descriptors(&self, retro: &Matrix, set: FeatureSet) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(set.descriptor_dim());
        if set.uses_fft() {
            out.extend(spectral_features(&self.minmax.apply(retro)?)?);
        }
        if set.uses_rp() {
            out.extend(multi_scale_rank_pool(
                &self.zscore.apply(retro)?,
                self.smoothing,
            )?);
        }
        Ok(out)
    }

    /// Flat input vector: min-max scaled input window (row-major, time then
    /// channel), then the descriptors.
    pub fn assemble(&self, sample: &Sample, set: FeatureSet) -> Result<Vec<f64>> {
        if sample.input.cols() != NUM_CHANNELS {
            return Err(Error::Shape(format!(
                "input window has {} channels, expected {NUM_CHANNELS}",
                sample.input.cols()
            )));
        }
        let mut out = Vec::with_capacity(set.input_dim(sample.input.rows()));
        out.extend_from_slice(self.minmax.apply(&sample.input)?.as_slice());
        out.extend(self.descriptors(&sample.retro, set)?);
        Ok(out)
    }
}

pub fn assemble_inputs(
    sample: &Sample,
    set: FeatureSet,
    pipeline: &FeaturePipeline,
) -> Result<Vec<f64>> {
    pipeline.assemble(sample, set)
}

/// Reshapes a flat input vector into an `lookback x (8 + descriptor_dim)`
/// sequence: row `t` is the scaled observation at step `t` followed by the
/// descriptor block, which is repeated on every step.
pub fn to_sequence(flat: &[f64], lookback: usize, set: FeatureSet) -> Result<Matrix> {
    if flat.len() != set.input_dim(lookback) {
        return Err(Error::Shape(format!(
            "input of length {} does not match {set} layout at lookback {lookback} ({})",
            flat.len(),
            set.input_dim(lookback)
        )));
    }
    let desc = &flat[NUM_CHANNELS * lookback..];
    let width = NUM_CHANNELS + desc.len();
    let mut m = Matrix::zeros(lookback, width);
    for t in 0..lookback {
        let row = m.row_mut(t);
        row[..NUM_CHANNELS].copy_from_slice(&flat[t * NUM_CHANNELS..(t + 1) * NUM_CHANNELS]);
        row[NUM_CHANNELS..].copy_from_slice(desc);
    }
    Ok(m)
}

/// Column names of the descriptor block of `set`, in vector order.
pub fn descriptor_names(set: FeatureSet) -> Vec<String> {
    let mut names = Vec::with_capacity(set.descriptor_dim());
    if set.uses_fft() {
        for ch in Channel::ALL {
            names.push(format!("fft_mag_{}", ch.name()));
            names.push(format!("fft_phase_{}", ch.name()));
        }
    }
    if set.uses_rp() {
        for s in RANK_POOL_SCALES {
            for ch in Channel::ALL {
                names.push(format!("rp{s}_{}", ch.name()));
            }
        }
    }
    names
}

/// Descriptors of every window of `ds` as CSV, one row per origin. The
/// normalizers are fitted on all observed rows of `ds`; this is an
/// inspection view, not the training path.
pub fn descriptor_csv(ds: &WindowedDataset, set: FeatureSet, smoothing: bool) -> Result<String> {
    let mut pipeline = FeaturePipeline::fit(&ds.observed_rows())?;
    pipeline.smoothing = smoothing;
    let mut out = String::from("origin_time");
    for n in descriptor_names(set) {
        out.push(',');
        out.push_str(&n);
    }
    out.push('\n');
    for s in &ds.samples {
        out.push_str(&s.origin_time.format(TIMESTAMP_FORMAT).to_string());
        for v in pipeline.descriptors(&s.retro, set)? {
            let _ = write!(out, ",{}", fmt_value(v));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn sample(lookback: usize) -> Sample {
        let retro = Matrix::from_vec(
            24,
            8,
            (0..192).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect(),
        )
        .unwrap();
        Sample {
            origin: 23,
            origin_time: NaiveDate::from_ymd_opt(2020, 1, 1)
                .unwrap()
                .and_hms_opt(23, 0, 0)
                .unwrap(),
            input: retro.slice_rows(24 - lookback, 24),
            retro,
            target: vec![0.0; 6],
        }
    }

    fn pipeline() -> FeaturePipeline {
        FeaturePipeline::fit(&sample(24).retro).unwrap()
    }

    #[test]
    fn dimensions() {
        let p = pipeline();
        assert_eq!(
            assemble_inputs(&sample(4), FeatureSet::Raw, &p)
                .unwrap()
                .len(),
            32
        );
        assert_eq!(
            assemble_inputs(&sample(16), FeatureSet::FftRp, &p)
                .unwrap()
                .len(),
            184
        );
        assert_eq!(FeatureSet::Fft.input_dim(8), 80);
        assert_eq!(FeatureSet::Rp.input_dim(12), 136);
    }

    #[test]
    fn perturbing_early_retro_row_only_moves_descriptors() {
        let p = pipeline();
        let base = sample(4);
        let mut moved = base.clone();
        moved.retro.set(2, 5, moved.retro.get(2, 5) + 1.5);
        let a = assemble_inputs(&base, FeatureSet::FftRp, &p).unwrap();
        let b = assemble_inputs(&moved, FeatureSet::FftRp, &p).unwrap();
        assert_eq!(a[..32], b[..32]);
        assert_ne!(a[32..], b[32..]);
    }

    #[test]
    fn sequence_layout_repeats_descriptors() {
        let flat: Vec<f64> = (0..(8 * 3 + 16)).map(|v| v as f64).collect();
        let s = to_sequence(&flat, 3, FeatureSet::Fft).unwrap();
        assert_eq!(s.shape(), (3, 24));
        assert_eq!(s.row(1)[..8], flat[8..16]);
        assert_eq!(s.row(2)[8..], flat[24..]);
        assert!(to_sequence(&flat, 4, FeatureSet::Fft).is_err());
    }
}
