//! Forecast error metrics and the results table.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::matrix::Matrix;
use crate::variant::{Backbone, Variant};

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "prediction has {} values, truth {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset("no values to score".into()));
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    let mse = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson_r(pred: &[f64], truth: &[f64]) -> Result<Option<f64>> {
    check(pred, truth)?;
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = truth.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Percentage reduction of an error metric relative to a baseline.
pub fn improvement(baseline: f64, model: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::Parameter(format!(
            "baseline must be positive, got {baseline}"
        )));
    }
    Ok(100.0 * (baseline - model) / baseline)
}

/// Percentage increase of a correlation relative to a baseline.
pub fn improvement_r(baseline: f64, model: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::Parameter(format!(
            "baseline must be positive, got {baseline}"
        )));
    }
    Ok(100.0 * (model - baseline) / baseline)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub r: Option<f64>,
}

impl Metrics {
    pub fn compute(pred: &[f64], truth: &[f64]) -> Result<Self> {
        Ok(Self {
            mae: mae(pred, truth)?,
            rmse: rmse(pred, truth)?,
            r: pearson_r(pred, truth)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Scored(Metrics),
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsCell {
    pub variant: Variant,
    pub lookback: usize,
    /// 1-based forecast step in hours.
    pub horizon: usize,
    pub outcome: Outcome,
}

impl MetricsCell {
    pub fn metrics(&self) -> Option<&Metrics> {
        match &self.outcome {
            Outcome::Scored(m) => Some(m),
            Outcome::Failed(_) => None,
        }
    }
}

/// Metric cells keyed by (variant, lookback, horizon).
#[derive(Clone, Debug, PartialEq)]
pub struct ResultsTable {
    pub variants: Vec<Variant>,
    pub lookbacks: Vec<usize>,
    pub horizons: usize,
    cells: BTreeMap<(Variant, usize, usize), MetricsCell>,
}

/// Shortest round-trip representation.
pub fn fmt_value(v: f64) -> String {
    format!("{v}")
}

/// One decimal, without a negative zero.
pub fn fmt_percent(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

pub const UNDEFINED: &str = "undefined";
pub const FAILED: &str = "failed";

impl ResultsTable {
    pub fn new(variants: Vec<Variant>, lookbacks: Vec<usize>, horizons: usize) -> Self {
        Self {
            variants,
            lookbacks,
            horizons,
            cells: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, cell: MetricsCell) {
        self.cells
            .insert((cell.variant, cell.lookback, cell.horizon), cell);
    }

    pub fn get(&self, variant: Variant, lookback: usize, horizon: usize) -> Option<&MetricsCell> {
        self.cells.get(&(variant, lookback, horizon))
    }

    pub fn cells(&self) -> impl Iterator<Item = &MetricsCell> {
        self.cells.values()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn failed_cells(&self) -> Vec<&MetricsCell> {
        self.cells
            .values()
            .filter(|c| c.metrics().is_none())
            .collect()
    }

    /// Wide table: one row per (step, variant), columns MAE, RMSE and R for
    /// each lookback.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,variant");
        for m in ["MAE", "RMSE", "R"] {
            for l in &self.lookbacks {
                out.push_str(&format!(",{m}_{l}"));
            }
        }
        out.push('\n');
        for h in 1..=self.horizons {
            for &v in &self.variants {
                out.push_str(&format!("{h},{v}"));
                for k in 0..3 {
                    for &l in &self.lookbacks {
                        let cell = match self.get(v, l, h).map(|c| &c.outcome) {
                            None => String::new(),
                            Some(Outcome::Failed(_)) => FAILED.into(),
                            Some(Outcome::Scored(m)) => match k {
                                0 => fmt_value(m.mae),
                                1 => fmt_value(m.rmse),
                                _ => m.r.map_or(UNDEFINED.into(), fmt_value),
                            },
                        };
                        out.push(',');
                        out.push_str(&cell);
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Improvement of every non-baseline variant over MLP at the same
    /// lookback, one row per (variant, lookback), one column per step.
    /// `metric` is `mae`, `rmse` or `r`.
    pub fn improvement_csv(&self, metric: &str) -> Result<String> {
        let baseline = Variant::Single(Backbone::Mlp, FeatureSet::Raw);
        let pick = |m: &Metrics| -> Option<f64> {
            match metric {
                "mae" => Some(m.mae),
                "rmse" => Some(m.rmse),
                _ => m.r,
            }
        };
        if !["mae", "rmse", "r"].contains(&metric) {
            return Err(Error::Parameter(format!("unknown metric `{metric}`")));
        }
        let mut out = String::from("variant,lookback");
        for h in 1..=self.horizons {
            out.push_str(&format!(",step_{h}"));
        }
        out.push('\n');
        for &v in self.variants.iter().filter(|&&v| v != baseline) {
            for &l in &self.lookbacks {
                out.push_str(&format!("{v},{l}"));
                for h in 1..=self.horizons {
                    let base = self.get(baseline, l, h).ok_or_else(|| {
                        Error::MissingCell(format!("baseline {baseline} lookback {l} step {h}"))
                    })?;
                    let value = match (
                        base.metrics().and_then(pick),
                        self.get(v, l, h).map(|c| &c.outcome),
                    ) {
                        (_, None) => String::new(),
                        (None, _) | (_, Some(Outcome::Failed(_))) => FAILED.into(),
                        (Some(b), Some(Outcome::Scored(m))) => {
                            let imp = match (metric, pick(m)) {
                                ("r", Some(x)) => improvement_r(b, x).ok(),
                                (_, Some(x)) => improvement(b, x).ok(),
                                _ => None,
                            };
                            imp.map_or(UNDEFINED.into(), fmt_percent)
                        }
                    };
                    out.push(',');
                    out.push_str(&value);
                }
                out.push('\n');
            }
        }
        Ok(out)
    }
}

/// Scores `horizons x n` predictions against truth for every requested
/// (variant, lookback); a cell listed in `failed` is recorded as failed.
pub fn metrics_grid(
    predictions: &BTreeMap<(Variant, usize), Matrix>,
    truth: &BTreeMap<usize, Matrix>,
    variants: &[Variant],
    lookbacks: &[usize],
    failed: &BTreeMap<(Variant, usize), String>,
) -> Result<ResultsTable> {
    let horizons = truth.values().next().map_or(0, Matrix::rows);
    let mut table = ResultsTable::new(variants.to_vec(), lookbacks.to_vec(), horizons);
    for &v in variants {
        for &l in lookbacks {
            if let Some(reason) = failed.get(&(v, l)) {
                for h in 1..=horizons {
                    table.insert(MetricsCell {
                        variant: v,
                        lookback: l,
                        horizon: h,
                        outcome: Outcome::Failed(reason.clone()),
                    });
                }
                continue;
            }
            let p = predictions
                .get(&(v, l))
                .ok_or_else(|| Error::MissingCell(format!("{v} at lookback {l}")))?;
            let t = truth
                .get(&l)
                .ok_or_else(|| Error::MissingCell(format!("truth at lookback {l}")))?;
            if p.shape() != t.shape() {
                return Err(Error::Shape(format!(
                    "{v} at lookback {l}: prediction and truth differ in shape"
                )));
            }
            for h in 0..t.rows() {
                table.insert(MetricsCell {
                    variant: v,
                    lookback: l,
                    horizon: h + 1,
                    outcome: Outcome::Scored(Metrics::compute(p.row(h), t.row(h))?),
                });
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_anticorrelation() {
        let t = [1.0, 3.0, 2.0, 5.0];
        assert_eq!(mae(&t, &t).unwrap(), 0.0);
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
        assert_eq!(pearson_r(&t, &t).unwrap(), Some(1.0));
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert_eq!(pearson_r(&neg, &t).unwrap(), Some(-1.0));
    }

    #[test]
    fn constant_truth() {
        let (p, t) = ([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]);
        assert!((mae(&p, &t).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((rmse(&p, &t).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(pearson_r(&p, &t).unwrap(), None);
        assert!(mae(&p, &t[..2]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn improvement_percentages() {
        assert!((improvement(0.865, 0.629).unwrap() - 27.3).abs() < 0.05);
        assert!((improvement(0.690, 0.602).unwrap() - 12.8).abs() < 0.05);
        assert_eq!(improvement(1.5, 1.5).unwrap(), 0.0);
        assert!(improvement(0.0, 1.0).is_err());
        assert_eq!(fmt_percent(-0.01), "0.0");
    }

    #[test]
    fn grid_cardinality_and_missing_cells() {
        let v = [
            Variant::Single(Backbone::Mlp, FeatureSet::Raw),
            Variant::Single(Backbone::Lstm, FeatureSet::Raw),
        ];
        let truth_m = Matrix::from_vec(6, 3, (0..18).map(|i| i as f64).collect()).unwrap();
        let truth: BTreeMap<_, _> = [(4, truth_m.clone()), (8, truth_m.clone())].into();
        let mut preds = BTreeMap::new();
        for &variant in &v {
            for l in [4, 8] {
                preds.insert((variant, l), truth_m.map(|x| x + 0.5));
            }
        }
        let table = metrics_grid(&preds, &truth, &v, &[4, 8], &BTreeMap::new()).unwrap();
        assert_eq!(table.len(), 24);
        assert_eq!(table.get(v[1], 8, 6).unwrap().metrics().unwrap().mae, 0.5);
        preds.remove(&(v[1], 8));
        let err = metrics_grid(&preds, &truth, &v, &[4, 8], &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("LSTM at lookback 8"));
    }

    #[test]
    fn improvements_need_the_baseline() {
        let v = [Variant::Fused(Backbone::Mlp)];
        let t = Matrix::from_vec(6, 3, (0..18).map(|i| i as f64).collect()).unwrap();
        let preds = [((v[0], 4), t.clone())].into();
        let table = metrics_grid(&preds, &[(4, t)].into(), &v, &[4], &BTreeMap::new()).unwrap();
        assert!(matches!(
            table.improvement_csv("mae"),
            Err(Error::MissingCell(_))
        ));
    }
}
