//! Normalization, sliding-window sample construction and chronological splits.

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::ingest::{Channel, TimeSeriesFrame, NUM_CHANNELS};
use crate::matrix::Matrix;

pub const DEFAULT_HORIZONS: usize = 6;
pub const DEFAULT_RETRO: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// `(x - mean) / std` with the population standard deviation.
    ZScore,
    /// `(x - min) / (max - min)`, mapping the fitted range onto `[0, 1]`.
    MinMax,
}

/// Per-column affine scaling fitted on training rows.
///
/// For z-score columns `(a, b)` is `(mean, std)`; for min-max it is `(min, max)`.
/// A degenerate column (`std == 0` or `max == min`) is flagged: `apply` maps it to
/// 0 (z-score) or 0.5 (min-max) and `invert` returns the constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    kind: NormKind,
    params: Vec<(f64, f64)>,
}

impl Normalizer {
    /// Builds a normalizer from stored parameters (used when loading models).
    pub fn from_params(kind: NormKind, params: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(a, b)) in params.iter().enumerate() {
            let ok = a.is_finite()
                && b.is_finite()
                && match kind {
                    NormKind::ZScore => b >= 0.0,
                    NormKind::MinMax => b >= a,
                };
            if !ok {
                return Err(Error::Parameter(format!(
                    "invalid normalizer parameters ({a}, {b}) for column {i}"
                )));
            }
        }
        Ok(Self { kind, params })
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    pub fn columns(&self) -> usize {
        self.params.len()
    }

    pub fn is_flagged(&self, col: usize) -> bool {
        let (a, b) = self.params[col];
        match self.kind {
            NormKind::ZScore => b == 0.0,
            NormKind::MinMax => b == a,
        }
    }

    #[inline]
    pub fn apply_value(&self, col: usize, x: f64) -> f64 {
        let (a, b) = self.params[col];
        match self.kind {
            NormKind::ZScore if b == 0.0 => 0.0,
            NormKind::ZScore => (x - a) / b,
            NormKind::MinMax if b == a => 0.5,
            NormKind::MinMax => (x - a) / (b - a),
        }
    }

    #[inline]
    pub fn invert_value(&self, col: usize, z: f64) -> f64 {
        let (a, b) = self.params[col];
        match self.kind {
            NormKind::ZScore => z * b + a,
            NormKind::MinMax if b == a => a,
            NormKind::MinMax => z * (b - a) + a,
        }
    }

    fn check_cols(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.params.len() {
            return Err(Error::Shape(format!(
                "normalizer fitted on {} columns applied to {}",
                self.params.len(),
                m.cols()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, rows: &Matrix) -> Result<Matrix> {
        self.check_cols(rows)?;
        let mut out = rows.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.apply_value(c, *v);
            }
        }
        Ok(out)
    }

    pub fn invert(&self, rows: &Matrix) -> Result<Matrix> {
        self.check_cols(rows)?;
        let mut out = rows.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.invert_value(c, *v);
            }
        }
        Ok(out)
    }
}

pub fn fit_normalizer(rows: &Matrix, kind: NormKind) -> Result<Normalizer> {
    if rows.rows() < 2 {
        return Err(Error::EmptyDataset(format!(
            "need at least 2 rows to fit a normalizer, got {}",
            rows.rows()
        )));
    }
    if !rows.is_finite() {
        return Err(Error::NonFinite("normalizer input".into()));
    }
    let n = rows.rows() as f64;
    let params: Vec<(f64, f64)> = (0..rows.cols())
        .map(|c| {
            let col = rows.column(c);
            match kind {
                NormKind::ZScore => {
                    let mean = col.iter().sum::<f64>() / n;
                    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
                NormKind::MinMax => {
                    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (min, max)
                }
            }
        })
        .collect();
    let norm = Normalizer { kind, params };
    for c in 0..norm.columns() {
        if norm.is_flagged(c) {
            log::warn!(
                "column {c} is constant over the fitting rows; {kind:?} maps it to a constant"
            );
        }
    }
    Ok(norm)
}

/// Window geometry: `lookback` rows fed directly to the regressor, `retro` rows
/// of history for the feature extractors, `horizons` hours of targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub lookback: usize,
    pub horizons: usize,
    pub retro: usize,
}

impl WindowSpec {
    pub fn new(lookback: usize) -> Self {
        Self {
            lookback,
            horizons: DEFAULT_HORIZONS,
            retro: DEFAULT_RETRO,
        }
    }
}

/// One forecast origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Row index of the origin in the source frame.
    pub origin: usize,
    pub origin_time: NaiveDateTime,
    /// Last `lookback` rows of `retro`, raw units.
    pub input: Matrix,
    /// The `retro` rows ending at the origin (inclusive), raw units.
    pub retro: Matrix,
    /// WS10mi at origin + 1..=horizons hours, m/s.
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    pub spec: WindowSpec,
    pub samples: Vec<Sample>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Frame rows touched by any sample, as `start..end`: the first retro row
    /// through the last target row.
    pub fn row_span(&self) -> Option<(usize, usize)> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        Some((
            first.origin + 1 - self.spec.retro,
            last.origin + self.spec.horizons + 1,
        ))
    }

    /// Targets as a `horizons x n` matrix.
    pub fn targets(&self) -> Matrix {
        let mut m = Matrix::zeros(self.spec.horizons, self.len());
        for (j, s) in self.samples.iter().enumerate() {
            for (h, &v) in s.target.iter().enumerate() {
                m.set(h, j, v);
            }
        }
        m
    }

    /// Distinct frame rows covered by the samples' retro windows, in time order.
    pub fn observed_rows(&self) -> Matrix {
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut next = 0;
        for s in &self.samples {
            let start = s.origin + 1 - s.retro.rows();
            for r in next.max(start)..=s.origin {
                rows.push(s.retro.row(r - start));
            }
            next = next.max(s.origin + 1);
        }
        if rows.is_empty() {
            return Matrix::zeros(0, NUM_CHANNELS);
        }
        Matrix::from_rows(&rows).expect("retro rows share a width")
    }

    /// Every WS10mi value seen by the samples, inputs and targets alike.
    pub fn target_channel_values(&self) -> Vec<f64> {
        let col = Channel::Ws10mi.index();
        let obs = self.observed_rows();
        let mut v: Vec<f64> = (0..obs.rows()).map(|r| obs.get(r, col)).collect();
        v.extend(self.samples.iter().flat_map(|s| s.target.iter().copied()));
        v
    }
}

pub fn make_windows(frame: &TimeSeriesFrame, spec: WindowSpec) -> Result<WindowedDataset> {
    let WindowSpec {
        lookback,
        horizons,
        retro,
    } = spec;
    if lookback == 0 || horizons == 0 || retro == 0 {
        return Err(Error::Parameter(format!(
            "lookback, horizons and retro must be positive (got {lookback}, {horizons}, {retro})"
        )));
    }
    if lookback > retro {
        return Err(Error::Parameter(format!(
            "lookback {lookback} exceeds retrospective window {retro}"
        )));
    }
    if !frame.is_regular() {
        return Err(Error::Gap(
            "frame is not hourly-regular; impute gaps first".into(),
        ));
    }
    if frame.len() < retro + horizons {
        return Err(Error::EmptyDataset(format!(
            "frame of {} rows is shorter than retro {retro} + horizons {horizons}",
            frame.len()
        )));
    }
    let target_col = frame.column(Channel::Ws10mi);
    let samples = (retro - 1..frame.len() - horizons)
        .map(|origin| {
            let retro_m = frame.rows_matrix(origin + 1 - retro, origin + 1);
            Sample {
                origin,
                origin_time: frame.timestamps()[origin],
                input: retro_m.slice_rows(retro - lookback, retro),
                retro: retro_m,
                target: target_col[origin + 1..=origin + horizons].to_vec(),
            }
        })
        .collect();
    Ok(WindowedDataset { spec, samples })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// Contiguous train → val → test blocks.
///
/// A sample at the end of the train or val block is dropped when its last
/// target hour reaches the first origin of the following block, so no target
/// of an earlier block lies at or after any origin of a later one.
pub fn split_chronological(
    ds: &WindowedDataset,
    fractions: SplitFractions,
) -> Result<(WindowedDataset, WindowedDataset, WindowedDataset)> {
    let SplitFractions { train, val, test } = fractions;
    if !(train > 0.0 && val > 0.0 && test > 0.0) || ((train + val + test) - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "split fractions must be positive and sum to 1, got ({train}, {val}, {test})"
        )));
    }
    let n = ds.len();
    let n_train = ((n as f64) * train + 1e-9).floor() as usize;
    let n_val = ((n as f64) * val + 1e-9).floor() as usize;
    let n_test = n.saturating_sub(n_train + n_val);

    let h = ds.spec.horizons;
    let block = |range: std::ops::Range<usize>, next_origin: Option<usize>| -> Vec<Sample> {
        ds.samples[range]
            .iter()
            .filter(|s| next_origin.is_none_or(|next| s.origin + h < next))
            .cloned()
            .collect()
    };
    let origin_at = |i: usize| ds.samples.get(i).map(|s| s.origin);
    let train_s = block(0..n_train, origin_at(n_train));
    let val_s = block(n_train..n_train + n_val, origin_at(n_train + n_val));
    let test_s = block(n_train + n_val..n, None);

    for (name, len) in [
        ("train", train_s.len()),
        ("validation", val_s.len()),
        ("test", test_s.len()),
    ] {
        if len == 0 {
            return Err(Error::EmptyDataset(format!(
                "{name} split is empty ({n} samples, block sizes {n_train}/{n_val}/{n_test} before boundary drops)"
            )));
        }
    }
    let mk = |samples| WindowedDataset {
        spec: ds.spec,
        samples,
    };
    Ok((mk(train_s), mk(val_s), mk(test_s)))
}
