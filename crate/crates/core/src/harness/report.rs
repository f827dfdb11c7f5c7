//! Report files: the results table, improvement series, raw predictions and
//! the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::harness::config::ExperimentConfig;
use crate::harness::grid::GridOutput;
use crate::ingest::TIMESTAMP_FORMAT;
use crate::matrix::Matrix;
use crate::metrics::{fmt_value, metrics_grid, ResultsTable};
use crate::variant::{Backbone, Variant};

pub const TABLE_FILE: &str = "table.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "run_manifest";
pub const FUSION_FILE: &str = "fusion.csv";

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `table.csv` and, if `improvements` is set, one improvement-vs-MLP
/// file per metric. Fails before writing anything when the MLP baseline
/// cells are missing.
pub fn emit_report(
    table: &ResultsTable,
    out_dir: &Path,
    improvements: bool,
) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(Error::EmptyDataset("results table is empty".into()));
    }
    let imps = if improvements {
        ["mae", "rmse", "r"]
            .iter()
            .map(|m| Ok((format!("improvement_{m}.csv"), table.improvement_csv(m)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    write(out_dir, TABLE_FILE, &table.to_csv(), &mut written)?;
    for (name, text) in imps {
        write(out_dir, &name, &text, &mut written)?;
    }
    Ok(written)
}

/// Long-form test forecasts: one line per (variant, lookback, origin, step).
pub fn predictions_csv(out: &GridOutput) -> String {
    let mut s = String::from("variant,lookback,origin_time,step,prediction,truth\n");
    for ((v, l), p) in &out.predictions {
        let truth = &out.truth[l];
        let times = &out.test_times[l];
        for (j, t) in times.iter().enumerate() {
            for h in 0..p.rows() {
                let _ = writeln!(
                    s,
                    "{v},{l},{},{},{},{}",
                    t.format(TIMESTAMP_FORMAT),
                    h + 1,
                    fmt_value(p.get(h, j)),
                    fmt_value(truth.get(h, j))
                );
            }
        }
    }
    s
}

type PredictionMaps = (BTreeMap<(Variant, usize), Matrix>, BTreeMap<usize, Matrix>);

/// Reads [`predictions_csv`] output back into `horizons x n` matrices.
pub fn parse_predictions_csv(text: &str) -> Result<PredictionMaps> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    // (variant, lookback) -> origin -> step -> (prediction, truth)
    let mut cells: BTreeMap<(Variant, usize), BTreeMap<String, BTreeMap<usize, (f64, f64)>>> =
        BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse {
            row: i + 1,
            column: what.into(),
            message: format!("invalid value `{}`", rec.get(0).unwrap_or("")),
        };
        if rec.len() != 6 {
            return Err(bad("record"));
        }
        let v: Variant = rec[0].parse().map_err(|_| bad("variant"))?;
        let l: usize = rec[1].parse().map_err(|_| bad("lookback"))?;
        let step: usize = rec[3].parse().map_err(|_| bad("step"))?;
        let p: f64 = rec[4].parse().map_err(|_| bad("prediction"))?;
        let t: f64 = rec[5].parse().map_err(|_| bad("truth"))?;
        if step == 0 {
            return Err(bad("step"));
        }
        cells
            .entry((v, l))
            .or_default()
            .entry(rec[2].to_string())
            .or_default()
            .insert(step, (p, t));
    }
    let mut preds = BTreeMap::new();
    let mut truth = BTreeMap::new();
    for ((v, l), origins) in cells {
        let horizons = origins.values().map(|s| s.len()).max().unwrap_or(0);
        let mut p = Matrix::zeros(horizons, origins.len());
        let mut t = Matrix::zeros(horizons, origins.len());
        for (j, steps) in origins.values().enumerate() {
            if steps.len() != horizons || steps.keys().copied().ne(1..=horizons) {
                return Err(Error::Format(format!(
                    "{v} at lookback {l}: ragged forecast steps"
                )));
            }
            for (&h, &(pv, tv)) in steps {
                p.set(h - 1, j, pv);
                t.set(h - 1, j, tv);
            }
        }
        truth.entry(l).or_insert(t);
        preds.insert((v, l), p);
    }
    Ok((preds, truth))
}

fn fusion_csv(out: &GridOutput) -> String {
    let mut s = String::from("variant,lookback,step,fused_mse,fft_mse,rp_mse,mean_mse\n");
    for ((v, l), rows) in &out.fusion {
        for (h, d) in rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{v},{l},{},{},{},{},{}",
                h + 1,
                fmt_value(d.fused_mse),
                fmt_value(d.fft_mse),
                fmt_value(d.rp_mse),
                fmt_value(d.mean_mse)
            );
        }
    }
    s
}

/// The configuration that produced a run, as re-loadable `key = value` text.
pub fn manifest_text(cfg: &ExperimentConfig) -> String {
    format!(
        "# {} {} run manifest; load with --config to reproduce\n{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        cfg.to_kv_text()
    )
}

/// Writes the full output of a grid run. Improvement files are written when
/// the MLP baseline is part of the grid; models are saved under `models/`
/// when `save_models` is set.
pub fn write_run(
    out: &GridOutput,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    save_models: bool,
) -> Result<Vec<PathBuf>> {
    let has_baseline = cfg
        .variants
        .contains(&Variant::Single(Backbone::Mlp, FeatureSet::Raw));
    let mut written = emit_report(&out.table, out_dir, has_baseline)?;
    write(
        out_dir,
        PREDICTIONS_FILE,
        &predictions_csv(out),
        &mut written,
    )?;
    if !out.fusion.is_empty() {
        write(out_dir, FUSION_FILE, &fusion_csv(out), &mut written)?;
    }
    write(out_dir, MANIFEST_FILE, &manifest_text(cfg), &mut written)?;
    if save_models {
        let dir = out_dir.join("models");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for ((v, l), m) in &out.models {
            let path = dir.join(format!("{v}_L{l}.tpcm"));
            std::fs::write(&path, m.save()).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Rebuilds a run's results table from its `run_manifest` and
/// `predictions.csv`. Cells absent from the predictions are marked failed.
pub fn rebuild_table(run_dir: &Path) -> Result<(ExperimentConfig, ResultsTable)> {
    let cfg = ExperimentConfig::from_file(run_dir.join(MANIFEST_FILE))?;
    let path = run_dir.join(PREDICTIONS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let (preds, truth) = parse_predictions_csv(&text)?;
    let mut failed = BTreeMap::new();
    for &v in &cfg.variants {
        for &l in &cfg.lookbacks {
            if !preds.contains_key(&(v, l)) {
                failed.insert((v, l), "no predictions recorded".to_string());
            }
        }
    }
    let table = metrics_grid(&preds, &truth, &cfg.variants, &cfg.lookbacks, &failed)?;
    Ok((cfg, table))
}
