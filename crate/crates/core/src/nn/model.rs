//! A trained variant: feature normalizers, one or two networks, optional
//! fusion weights, and the binary model format.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{FusionWeights, HorizonWeights};
use crate::error::{Error, Result};
use crate::features::{FeaturePipeline, FeatureSet};
use crate::matrix::Matrix;
use crate::nn::adam::AdamConfig;
use crate::nn::lstm::CellActivation;
use crate::nn::network::{ArchSpec, Network};
use crate::nn::train::{init_rng, train, PatienceUnit, TrainConfig, TrainReport};
use crate::nn::Parameters;
use crate::preprocess::{
    fit_normalizer, NormKind, Normalizer, Sample, WindowSpec, WindowedDataset,
};
use crate::variant::{cell_seed, Variant};

pub const MAGIC: &[u8; 4] = b"TPCM";
pub const FORMAT_VERSION: u16 = 1;

/// One trained network and where its training stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork {
    pub network: Network,
    pub seed: u64,
    pub best_epoch: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub variant: Variant,
    pub window: WindowSpec,
    pub pipeline: FeaturePipeline,
    /// Min-max scaling of WS10mi onto the sigmoid output range.
    pub target_norm: Normalizer,
    pub config: TrainConfig,
    /// One network, or the FFT then RP branch of a fused variant.
    pub branches: Vec<TrainedNetwork>,
    pub fusion: Option<FusionWeights>,
}

/// Fits the input pipeline and the target scaling on a training block.
pub fn fit_scaling(train_ds: &WindowedDataset) -> Result<(FeaturePipeline, Normalizer)> {
    let rows = train_ds.observed_rows();
    let pipeline = FeaturePipeline::fit(&rows)?;
    let ws = train_ds.target_channel_values();
    let target_norm = fit_normalizer(&Matrix::from_vec(ws.len(), 1, ws)?, NormKind::MinMax)?;
    Ok((pipeline, target_norm))
}

/// Flat input rows (`n x input_dim`) for every sample.
pub fn design_matrix(
    samples: &[Sample],
    set: FeatureSet,
    pipeline: &FeaturePipeline,
) -> Result<Matrix> {
    let rows = samples
        .iter()
        .map(|s| pipeline.assemble(s, set))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset("no samples".into()));
    }
    Matrix::from_rows(&rows)
}

/// Targets scaled into `[0, 1]`, `n x horizons`.
pub fn scaled_targets(samples: &[Sample], target_norm: &Normalizer) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            s.target
                .iter()
                .map(|&v| target_norm.apply_value(0, v))
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Maps `n x horizons` network outputs back to m/s as a `horizons x n`
/// matrix, clamped at zero.
pub fn finalize_predictions(scaled: &Matrix, target_norm: &Normalizer) -> Matrix {
    let mut out = Matrix::zeros(scaled.cols(), scaled.rows());
    for j in 0..scaled.rows() {
        for h in 0..scaled.cols() {
            out.set(h, j, target_norm.invert_value(0, scaled.get(j, h)).max(0.0));
        }
    }
    out
}

/// Trains one network on a feature set.
#[allow(clippy::too_many_arguments)]
pub fn train_branch(
    arch: &ArchSpec,
    set: FeatureSet,
    train_ds: &WindowedDataset,
    val_ds: &WindowedDataset,
    pipeline: &FeaturePipeline,
    target_norm: &Normalizer,
    cfg: &TrainConfig,
) -> Result<(TrainedNetwork, TrainReport)> {
    let tx = design_matrix(&train_ds.samples, set, pipeline)?;
    let ty = scaled_targets(&train_ds.samples, target_norm)?;
    let vx = design_matrix(&val_ds.samples, set, pipeline)?;
    let vy = scaled_targets(&val_ds.samples, target_norm)?;
    let net = Network::new(
        arch,
        train_ds.spec.lookback,
        set,
        train_ds.spec.horizons,
        &mut init_rng(cfg.seed),
    )?;
    let (network, report) = train(net, &tx, &ty, &vx, &vy, cfg)?;
    Ok((
        TrainedNetwork {
            network,
            seed: cfg.seed,
            best_epoch: report.best_epoch,
        },
        report,
    ))
}

impl TrainedModel {
    /// Trains `variant` end to end. Each network's seed is derived from
    /// `cfg.seed`, its own single-branch tag and the lookback, so a model
    /// trained here matches the corresponding grid cell. A fused variant then
    /// fits its fusion on the validation block.
    pub fn train(
        variant: Variant,
        arch: &ArchSpec,
        train_ds: &WindowedDataset,
        val_ds: &WindowedDataset,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        Self::train_with_smoothing(variant, arch, train_ds, val_ds, cfg, true)
    }

    /// [`TrainedModel::train`] with an explicit rank-pooling smoothing choice.
    pub fn train_with_smoothing(
        variant: Variant,
        arch: &ArchSpec,
        train_ds: &WindowedDataset,
        val_ds: &WindowedDataset,
        cfg: &TrainConfig,
        smoothing: bool,
    ) -> Result<Self> {
        if train_ds.spec != val_ds.spec {
            return Err(Error::Parameter(
                "train and validation windows differ".into(),
            ));
        }
        let (mut pipeline, target_norm) = fit_scaling(train_ds)?;
        pipeline.smoothing = smoothing;
        let mut branches = Vec::new();
        for branch in variant.branches() {
            let bcfg = TrainConfig {
                seed: cell_seed(cfg.seed, branch, train_ds.spec.lookback),
                ..*cfg
            };
            let set = branch.branch_sets()[0];
            branches
                .push(train_branch(arch, set, train_ds, val_ds, &pipeline, &target_norm, &bcfg)?.0);
        }
        let mut model = TrainedModel {
            variant,
            window: train_ds.spec,
            pipeline,
            target_norm,
            config: *cfg,
            branches,
            fusion: None,
        };
        if variant.is_fused() {
            let preds = model.branch_predictions(val_ds)?;
            model.fusion = Some(FusionWeights::fit(&preds[0], &preds[1], &val_ds.targets())?);
        }
        Ok(model)
    }

    fn check_window(&self, ds: &WindowedDataset) -> Result<()> {
        if ds.spec != self.window {
            return Err(Error::Shape(format!(
                "model expects windows {:?}, dataset has {:?}",
                self.window, ds.spec
            )));
        }
        Ok(())
    }

    /// Each branch's forecast in m/s, `horizons x n`, clamped at zero.
    pub fn branch_predictions(&self, ds: &WindowedDataset) -> Result<Vec<Matrix>> {
        self.check_window(ds)?;
        self.branches
            .iter()
            .map(|b| {
                let x = design_matrix(&ds.samples, b.network.features, &self.pipeline)?;
                Ok(finalize_predictions(
                    &b.network.forward(&x)?,
                    &self.target_norm,
                ))
            })
            .collect()
    }

    /// Forecast in m/s, `horizons x n`.
    pub fn predict(&self, ds: &WindowedDataset) -> Result<Matrix> {
        let mut preds = self.branch_predictions(ds)?;
        match &self.fusion {
            Some(w) => w.apply(&preds[0], &preds[1]),
            None => Ok(preds.swap_remove(0)),
        }
    }

    pub fn save(&self) -> Vec<u8> {
        save(self)
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        load(bytes)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u16(s.len() as u16);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn normalizer(&mut self, n: &Normalizer) {
        self.u8(match n.kind() {
            NormKind::ZScore => 0,
            NormKind::MinMax => 1,
        });
        self.u32(n.columns());
        for &(a, b) in n.params() {
            self.f64(a);
            self.f64(b);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn str(&mut self, what: &str) -> Result<String> {
        let n = self.u16(what)? as usize;
        String::from_utf8(self.take(n, what)?.to_vec())
            .map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
    fn normalizer(&mut self, what: &str) -> Result<Normalizer> {
        let kind = match self.u8(what)? {
            0 => NormKind::ZScore,
            1 => NormKind::MinMax,
            k => {
                return Err(Error::Format(format!(
                    "unknown normalizer kind {k} in {what}"
                )))
            }
        };
        let cols = self.u32(what)?;
        let params = (0..cols)
            .map(|_| Ok((self.f64(what)?, self.f64(what)?)))
            .collect::<Result<Vec<_>>>()?;
        Normalizer::from_params(kind, params)
    }
}

/// Serializes a model; the layout is documented in `docs/model-format.md`.
pub fn save(model: &TrainedModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(FORMAT_VERSION);
    w.str(&model.variant.tag());
    w.u32(model.window.lookback);
    w.u32(model.window.horizons);
    w.u32(model.window.retro);

    let c = &model.config;
    w.f64(c.adam.lr);
    w.f64(c.adam.beta1);
    w.f64(c.adam.beta2);
    w.f64(c.adam.eps);
    w.u32(c.max_epochs);
    w.u32(c.patience);
    w.u8(c.patience_unit.code());
    w.u32(c.batch_size);
    w.u64(c.seed);

    w.u8(u8::from(model.pipeline.smoothing));
    w.normalizer(&model.pipeline.minmax);
    w.normalizer(&model.pipeline.zscore);
    w.normalizer(&model.target_norm);

    w.u8(model.branches.len() as u8);
    for b in &model.branches {
        let net = &b.network;
        w.u8(net.features.code());
        let arch = net.arch();
        w.u8(arch.code());
        match &arch {
            ArchSpec::Mlp { hidden } => {
                w.u32(hidden.len());
                hidden.iter().for_each(|&h| w.u32(h));
            }
            ArchSpec::Lstm { units, activation } => {
                w.u32(*units);
                w.u8(activation.code());
            }
            ArchSpec::Mixer {
                blocks,
                token_hidden,
                channel_hidden,
            } => {
                w.u32(*blocks);
                w.u32(*token_hidden);
                w.u32(*channel_hidden);
            }
        }
        w.u32(net.outputs());
        w.u64(b.seed);
        w.u32(b.best_epoch);
        let shapes = net.shapes();
        w.u32(shapes.len());
        for (r, c) in shapes {
            w.u32(r);
            w.u32(c);
        }
        for t in net.tensors() {
            t.iter().for_each(|&v| w.f64(v));
        }
    }

    match &model.fusion {
        None => w.u8(0),
        Some(f) => {
            w.u8(1);
            w.u32(f.horizons.len());
            for h in &f.horizons {
                w.f64(h.w_fft);
                w.f64(h.w_rp);
                w.f64(h.intercept);
            }
        }
    }
    w.0
}

pub fn load(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, not a model file".into()));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let variant: Variant = r
        .str("variant tag")?
        .parse()
        .map_err(|e| Error::Format(format!("{e}")))?;
    let window = WindowSpec {
        lookback: r.u32("lookback")?,
        horizons: r.u32("horizons")?,
        retro: r.u32("retro")?,
    };
    let config = TrainConfig {
        adam: AdamConfig {
            lr: r.f64("lr")?,
            beta1: r.f64("beta1")?,
            beta2: r.f64("beta2")?,
            eps: r.f64("eps")?,
        },
        max_epochs: r.u32("max epochs")?,
        patience: r.u32("patience")?,
        patience_unit: PatienceUnit::from_code(r.u8("patience unit")?)
            .ok_or_else(|| Error::Format("unknown patience unit".into()))?,
        batch_size: r.u32("batch size")?,
        seed: r.u64("seed")?,
    };
    let smoothing = r.u8("smoothing flag")? != 0;
    let pipeline = FeaturePipeline {
        minmax: r.normalizer("min-max normalizer")?,
        zscore: r.normalizer("z-score normalizer")?,
        smoothing,
    };
    let target_norm = r.normalizer("target normalizer")?;

    let n_branches = r.u8("branch count")? as usize;
    if n_branches != variant.branches().len() {
        return Err(Error::Format(format!(
            "{variant} needs {} branches, file has {n_branches}",
            variant.branches().len()
        )));
    }
    let mut branches = Vec::with_capacity(n_branches);
    for _ in 0..n_branches {
        let features = FeatureSet::from_code(r.u8("feature set")?)
            .ok_or_else(|| Error::Format("unknown feature set".into()))?;
        let arch = match r.u8("architecture")? {
            0 => {
                let n = r.u32("hidden count")?;
                ArchSpec::Mlp {
                    hidden: (0..n)
                        .map(|_| r.u32("hidden width"))
                        .collect::<Result<_>>()?,
                }
            }
            1 => ArchSpec::Lstm {
                units: r.u32("units")?,
                activation: CellActivation::from_code(r.u8("cell activation")?)
                    .ok_or_else(|| Error::Format("unknown cell activation".into()))?,
            },
            2 => ArchSpec::Mixer {
                blocks: r.u32("blocks")?,
                token_hidden: r.u32("token hidden")?,
                channel_hidden: r.u32("channel hidden")?,
            },
            k => return Err(Error::Format(format!("unknown architecture code {k}"))),
        };
        let outputs = r.u32("outputs")?;
        let seed = r.u64("branch seed")?;
        let best_epoch = r.u32("best epoch")?;
        let mut network = Network::new(
            &arch,
            window.lookback,
            features,
            outputs,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .map_err(|e| Error::Format(format!("invalid architecture: {e}")))?;
        let n_tensors = r.u32("tensor count")?;
        let shapes = (0..n_tensors)
            .map(|_| Ok((r.u32("shape")?, r.u32("shape")?)))
            .collect::<Result<Vec<_>>>()?;
        if shapes != network.shapes() {
            return Err(Error::Format(
                "shape table does not match the architecture".into(),
            ));
        }
        for t in network.tensors_mut() {
            for v in t.iter_mut() {
                *v = r.f64("parameters")?;
            }
        }
        branches.push(TrainedNetwork {
            network,
            seed,
            best_epoch,
        });
    }

    let fusion = match r.u8("fusion flag")? {
        0 => None,
        1 => {
            let n = r.u32("fusion horizons")?;
            let horizons = (0..n)
                .map(|_| {
                    Ok(HorizonWeights {
                        w_fft: r.f64("fusion weights")?,
                        w_rp: r.f64("fusion weights")?,
                        intercept: r.f64("fusion weights")?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(FusionWeights { horizons })
        }
        k => return Err(Error::Format(format!("bad fusion flag {k}"))),
    };
    if fusion.is_some() != variant.is_fused() {
        return Err(Error::Format(format!(
            "fusion weights do not match variant {variant}"
        )));
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(TrainedModel {
        variant,
        window,
        pipeline,
        target_norm,
        config,
        branches,
        fusion,
    })
}
