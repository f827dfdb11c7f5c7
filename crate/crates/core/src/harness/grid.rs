//! The experiment grid: every (variant, lookback) cell trained and scored on
//! the test block.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use rayon::prelude::*;

use crate::ensemble::{dominance, Dominance, FusionWeights};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::harness::baseline::{mean_baseline, persistence_baseline};
use crate::harness::config::{DataSource, ExperimentConfig};
use crate::harness::synth::gen_synthetic;
use crate::ingest::{impute_gaps, read_csv, TimeSeriesFrame};
use crate::matrix::Matrix;
use crate::metrics::{metrics_grid, ResultsTable};
use crate::nn::model::{
    design_matrix, finalize_predictions, fit_scaling, scaled_targets, TrainedNetwork,
};
use crate::nn::network::Network;
use crate::nn::train::{init_rng, train};
use crate::nn::{TrainConfig, TrainedModel};
use crate::preprocess::{make_windows, split_chronological, WindowSpec, WindowedDataset};
use crate::variant::{cell_seed, Backbone, Variant};

/// Windows and splits for one lookback.
#[derive(Clone, Debug)]
pub struct LookbackData {
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

/// Everything a grid run produces.
#[derive(Clone, Debug)]
pub struct GridOutput {
    pub table: ResultsTable,
    /// Test-block forecasts in m/s, `horizons x n`, per (variant, lookback).
    pub predictions: BTreeMap<(Variant, usize), Matrix>,
    /// Test-block truth per lookback.
    pub truth: BTreeMap<usize, Matrix>,
    pub test_times: BTreeMap<usize, Vec<NaiveDateTime>>,
    /// Fit-block errors of each fused variant, per horizon.
    pub fusion: BTreeMap<(Variant, usize), Vec<Dominance>>,
    pub failures: BTreeMap<(Variant, usize), String>,
    pub models: BTreeMap<(Variant, usize), TrainedModel>,
    pub persistence: BTreeMap<usize, Matrix>,
    /// Per-horizon training-target mean, repeated over the test block.
    pub mean: BTreeMap<usize, Matrix>,
    pub data: BTreeMap<usize, LookbackData>,
}

impl GridOutput {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Loads and gap-fills the configured data, or generates it from the seed.
pub fn load_frame(cfg: &ExperimentConfig) -> Result<TimeSeriesFrame> {
    match &cfg.data {
        DataSource::Synthetic => gen_synthetic(&cfg.synthetic, cfg.seed.unwrap_or(0)),
        DataSource::Csv(path) => {
            let raw = read_csv(path)?;
            Ok(impute_gaps(&raw, cfg.gap_policy)?.0)
        }
    }
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutput> {
    let frame = load_frame(cfg)?;
    run_grid_on(&frame, cfg)
}

/// Windows `frame` at lookback `l` and splits it chronologically.
pub fn prepare_lookback(
    frame: &TimeSeriesFrame,
    cfg: &ExperimentConfig,
    l: usize,
) -> Result<LookbackData> {
    let spec = WindowSpec {
        lookback: l,
        horizons: cfg.horizons,
        retro: cfg.retro,
    };
    let ds = make_windows(frame, spec)?;
    let (train, val, test) = split_chronological(&ds, cfg.split)?;
    Ok(LookbackData { train, val, test })
}

/// Trains one (variant, lookback) cell outside the grid. With the same
/// config and seed the model equals the grid's model for that cell.
pub fn train_cell(
    frame: &TimeSeriesFrame,
    cfg: &ExperimentConfig,
    variant: Variant,
    lookback: usize,
) -> Result<(TrainedModel, LookbackData)> {
    let seed = cfg
        .seed
        .ok_or_else(|| Error::Config("a seed is required for training".into()))?;
    let d = prepare_lookback(frame, cfg, lookback)?;
    let tcfg = TrainConfig { seed, ..cfg.train };
    let model = TrainedModel::train_with_smoothing(
        variant,
        &cfg.arch(variant.backbone()),
        &d.train,
        &d.val,
        &tcfg,
        cfg.smoothing,
    )?;
    Ok((model, d))
}

/// One network to train: shared by the single variant it names and by any
/// fused variant using it as a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct BranchKey {
    backbone: Backbone,
    features: FeatureSet,
    lookback: usize,
}

struct Inputs {
    train_x: Matrix,
    train_y: Matrix,
    val_x: Matrix,
    val_y: Matrix,
    test_x: Matrix,
}

pub fn run_grid_on(frame: &TimeSeriesFrame, cfg: &ExperimentConfig) -> Result<GridOutput> {
    cfg.validate()?;
    let seed = cfg
        .seed
        .ok_or_else(|| Error::Config("a seed is required for grid runs".into()))?;

    let mut data = BTreeMap::new();
    let mut scaling = BTreeMap::new();
    for &l in &cfg.lookbacks {
        let d = prepare_lookback(frame, cfg, l)?;
        let (mut pipeline, target_norm) = fit_scaling(&d.train)?;
        pipeline.smoothing = cfg.smoothing;
        scaling.insert(l, (pipeline, target_norm));
        data.insert(l, d);
    }

    let mut keys: Vec<BranchKey> = Vec::new();
    for &v in &cfg.variants {
        for &l in &cfg.lookbacks {
            for b in v.branches() {
                let key = BranchKey {
                    backbone: b.backbone(),
                    features: b.branch_sets()[0],
                    lookback: l,
                };
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
        }
    }
    keys.sort();

    // Design matrices are shared by every backbone.
    let mut inputs: BTreeMap<(FeatureSet, usize), Inputs> = BTreeMap::new();
    for k in &keys {
        if inputs.contains_key(&(k.features, k.lookback)) {
            continue;
        }
        let d = &data[&k.lookback];
        let (pipeline, target_norm) = &scaling[&k.lookback];
        inputs.insert(
            (k.features, k.lookback),
            Inputs {
                train_x: design_matrix(&d.train.samples, k.features, pipeline)?,
                train_y: scaled_targets(&d.train.samples, target_norm)?,
                val_x: design_matrix(&d.val.samples, k.features, pipeline)?,
                val_y: scaled_targets(&d.val.samples, target_norm)?,
                test_x: design_matrix(&d.test.samples, k.features, pipeline)?,
            },
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let trained: Vec<(BranchKey, std::result::Result<TrainedNetwork, String>)> =
        pool.install(|| {
            keys.par_iter()
                .map(|&k| {
                    let variant = Variant::Single(k.backbone, k.features);
                    let tcfg = TrainConfig {
                        seed: cell_seed(seed, variant, k.lookback),
                        ..cfg.train
                    };
                    let inp = &inputs[&(k.features, k.lookback)];
                    let result = Network::new(
                        &cfg.arch(k.backbone),
                        k.lookback,
                        k.features,
                        cfg.horizons,
                        &mut init_rng(tcfg.seed),
                    )
                    .and_then(|net| {
                        train(
                            net,
                            &inp.train_x,
                            &inp.train_y,
                            &inp.val_x,
                            &inp.val_y,
                            &tcfg,
                        )
                    })
                    .map(|(network, report)| {
                        log::info!(
                            "trained {variant} at lookback {}: best epoch {} of {}",
                            k.lookback,
                            report.best_epoch,
                            report.epochs_run
                        );
                        TrainedNetwork {
                            network,
                            seed: tcfg.seed,
                            best_epoch: report.best_epoch,
                        }
                    })
                    .map_err(|e| {
                        log::error!("{variant} at lookback {} failed: {e}", k.lookback);
                        e.to_string()
                    });
                    (k, result)
                })
                .collect()
        });
    let trained: BTreeMap<BranchKey, _> = trained.into_iter().collect();

    let mut out = GridOutput {
        table: ResultsTable::new(cfg.variants.clone(), cfg.lookbacks.clone(), cfg.horizons),
        predictions: BTreeMap::new(),
        truth: BTreeMap::new(),
        test_times: BTreeMap::new(),
        fusion: BTreeMap::new(),
        failures: BTreeMap::new(),
        models: BTreeMap::new(),
        persistence: BTreeMap::new(),
        mean: BTreeMap::new(),
        data: BTreeMap::new(),
    };

    for &l in &cfg.lookbacks {
        let d = &data[&l];
        out.truth.insert(l, d.test.targets());
        out.test_times
            .insert(l, d.test.samples.iter().map(|s| s.origin_time).collect());
        out.persistence.insert(l, persistence_baseline(&d.test));
        out.mean.insert(l, mean_baseline(&d.train, &d.test));
        let (pipeline, target_norm) = &scaling[&l];

        for &v in &cfg.variants {
            let branch_keys: Vec<BranchKey> = v
                .branches()
                .iter()
                .map(|b| BranchKey {
                    backbone: b.backbone(),
                    features: b.branch_sets()[0],
                    lookback: l,
                })
                .collect();
            let mut branches = Vec::new();
            let mut failure = None;
            for k in &branch_keys {
                match &trained[k] {
                    Ok(net) => branches.push(net.clone()),
                    Err(e) => failure = Some(e.clone()),
                }
            }
            if let Some(e) = failure {
                out.failures.insert((v, l), e);
                continue;
            }
            let forecast = |net: &Network, x: &Matrix| -> Result<Matrix> {
                Ok(finalize_predictions(&net.forward(x)?, target_norm))
            };
            let test_preds = branches
                .iter()
                .zip(&branch_keys)
                .map(|(b, k)| forecast(&b.network, &inputs[&(k.features, l)].test_x))
                .collect::<Result<Vec<_>>>()?;
            let mut fusion = None;
            let prediction = if v.is_fused() {
                let val_preds = branches
                    .iter()
                    .zip(&branch_keys)
                    .map(|(b, k)| forecast(&b.network, &inputs[&(k.features, l)].val_x))
                    .collect::<Result<Vec<_>>>()?;
                let y = d.val.targets();
                let w = FusionWeights::fit(&val_preds[0], &val_preds[1], &y)?;
                out.fusion
                    .insert((v, l), dominance(&w, &val_preds[0], &val_preds[1], &y)?);
                let p = w.apply(&test_preds[0], &test_preds[1])?;
                fusion = Some(w);
                p
            } else {
                test_preds[0].clone()
            };
            out.predictions.insert((v, l), prediction);
            out.models.insert(
                (v, l),
                TrainedModel {
                    variant: v,
                    window: d.train.spec,
                    pipeline: pipeline.clone(),
                    target_norm: target_norm.clone(),
                    config: TrainConfig { seed, ..cfg.train },
                    branches,
                    fusion,
                },
            );
        }
    }

    out.table = metrics_grid(
        &out.predictions,
        &out.truth,
        &cfg.variants,
        &cfg.lookbacks,
        &out.failures,
    )?;
    out.data = data;
    Ok(out)
}
