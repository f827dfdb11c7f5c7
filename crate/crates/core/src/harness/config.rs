//! Experiment configuration as flat `key = value` text.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::synth::SyntheticSpec;
use crate::ingest::{parse_timestamp, GapPolicy, TIMESTAMP_FORMAT};
use crate::nn::{ArchSpec, CellActivation, PatienceUnit, TrainConfig};
use crate::preprocess::{SplitFractions, DEFAULT_HORIZONS, DEFAULT_RETRO};
use crate::variant::{parse_variants, Backbone, Variant};

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic,
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub data: DataSource,
    pub synthetic: SyntheticSpec,
    pub gap_policy: GapPolicy,
    pub variants: Vec<Variant>,
    pub lookbacks: Vec<usize>,
    pub horizons: usize,
    pub retro: usize,
    pub split: SplitFractions,
    /// Optimiser and stopping settings; the seed field is replaced per cell.
    pub train: TrainConfig,
    pub seed: Option<u64>,
    pub workers: usize,
    pub mlp_hidden: Vec<usize>,
    pub lstm_units: usize,
    pub lstm_cell_activation: CellActivation,
    pub mixer_blocks: usize,
    pub mixer_token_hidden: usize,
    pub mixer_channel_hidden: usize,
    pub smoothing: bool,
}

/// Every key accepted by [`ExperimentConfig::set`], in manifest order.
pub const KEYS: &[&str] = &[
    "preset",
    "data",
    "gap_policy",
    "synth.length",
    "synth.base",
    "synth.amplitude",
    "synth.period",
    "synth.slope",
    "synth.phi",
    "synth.noise_std",
    "synth.mixing_seed",
    "synth.start",
    "variants",
    "lookbacks",
    "horizons",
    "retro",
    "split",
    "seed",
    "workers",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "max_epochs",
    "patience",
    "patience_unit",
    "batch_size",
    "mlp_hidden",
    "lstm_units",
    "lstm_cell_activation",
    "mixer_blocks",
    "mixer_token_hidden",
    "mixer_channel_hidden",
    "smoothing",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "`{key}`: expected true or false, got `{value}`"
        ))),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Synthetic 4000-hour data, patience 50, at most 500 epochs.
    pub fn desk() -> Self {
        Self {
            preset: "desk".into(),
            data: DataSource::Synthetic,
            synthetic: SyntheticSpec::default(),
            gap_policy: GapPolicy::ForwardFill,
            variants: Variant::default_grid(),
            lookbacks: vec![4, 8, 12, 16],
            horizons: DEFAULT_HORIZONS,
            retro: DEFAULT_RETRO,
            split: SplitFractions::default(),
            train: TrainConfig::desk(),
            seed: None,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            mlp_hidden: vec![100, 200, 50],
            lstm_units: 4,
            lstm_cell_activation: CellActivation::Tanh,
            mixer_blocks: 4,
            mixer_token_hidden: 64,
            mixer_channel_hidden: 128,
            smoothing: true,
        }
    }

    /// Patience 1500 epochs, at most 5000.
    pub fn paper() -> Self {
        Self {
            preset: "paper".into(),
            train: TrainConfig::paper(),
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            _ => Err(Error::Config(format!(
                "unknown preset `{name}` (expected desk or paper)"
            ))),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. A `preset` line is
    /// applied before every other key regardless of its position.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, v)) => Self::preset(v)?,
            None => Self::desk(),
        };
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "preset" => {
                let seed = self.seed;
                *self = Self {
                    seed,
                    ..Self::preset(value)?
                };
            }
            "data" => {
                self.data = if value.eq_ignore_ascii_case("synthetic") {
                    DataSource::Synthetic
                } else {
                    DataSource::Csv(PathBuf::from(value))
                }
            }
            "gap_policy" => {
                self.gap_policy = value.parse().map_err(|e| Error::Config(format!("{e}")))?
            }
            "synth.length" => self.synthetic.length = parse_num(key, value)?,
            "synth.base" => self.synthetic.base = parse_num(key, value)?,
            "synth.amplitude" => self.synthetic.amplitude = parse_num(key, value)?,
            "synth.period" => self.synthetic.period = parse_num(key, value)?,
            "synth.slope" => self.synthetic.slope = parse_num(key, value)?,
            "synth.phi" => self.synthetic.phi = parse_num(key, value)?,
            "synth.noise_std" => self.synthetic.noise_std = parse_num(key, value)?,
            "synth.mixing_seed" => self.synthetic.mixing_seed = parse_num(key, value)?,
            "synth.start" => {
                self.synthetic.start =
                    parse_timestamp(value).map_err(|e| Error::Config(format!("`{key}`: {e}")))?
            }
            "variants" => {
                self.variants = parse_variants(value).map_err(|e| Error::Config(format!("{e}")))?
            }
            "lookbacks" => self.lookbacks = parse_list(key, value)?,
            "horizons" => self.horizons = parse_num(key, value)?,
            "retro" => self.retro = parse_num(key, value)?,
            "split" => {
                let f: Vec<f64> = parse_list(key, value)?;
                if f.len() != 3 {
                    return Err(Error::Config("`split` needs three fractions".into()));
                }
                self.split = SplitFractions {
                    train: f[0],
                    val: f[1],
                    test: f[2],
                };
            }
            "seed" => self.seed = Some(parse_num(key, value)?),
            "workers" => self.workers = parse_num(key, value)?,
            "lr" => self.train.adam.lr = parse_num(key, value)?,
            "beta1" => self.train.adam.beta1 = parse_num(key, value)?,
            "beta2" => self.train.adam.beta2 = parse_num(key, value)?,
            "eps" => self.train.adam.eps = parse_num(key, value)?,
            "max_epochs" => self.train.max_epochs = parse_num(key, value)?,
            "patience" => self.train.patience = parse_num(key, value)?,
            "patience_unit" => {
                self.train.patience_unit = value
                    .parse::<PatienceUnit>()
                    .map_err(|e| Error::Config(format!("{e}")))?
            }
            "batch_size" => self.train.batch_size = parse_num(key, value)?,
            "mlp_hidden" => self.mlp_hidden = parse_list(key, value)?,
            "lstm_units" => self.lstm_units = parse_num(key, value)?,
            "lstm_cell_activation" => {
                self.lstm_cell_activation =
                    value.parse().map_err(|e| Error::Config(format!("{e}")))?
            }
            "mixer_blocks" => self.mixer_blocks = parse_num(key, value)?,
            "mixer_token_hidden" => self.mixer_token_hidden = parse_num(key, value)?,
            "mixer_channel_hidden" => self.mixer_channel_hidden = parse_num(key, value)?,
            "smoothing" => self.smoothing = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses and applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
    }

    fn value_of(&self, key: &str) -> String {
        let s = &self.synthetic;
        let t = &self.train;
        match key {
            "preset" => self.preset.clone(),
            "data" => match &self.data {
                DataSource::Synthetic => "synthetic".into(),
                DataSource::Csv(p) => p.display().to_string(),
            },
            "gap_policy" => self.gap_policy.to_string(),
            "synth.length" => s.length.to_string(),
            "synth.base" => s.base.to_string(),
            "synth.amplitude" => s.amplitude.to_string(),
            "synth.period" => s.period.to_string(),
            "synth.slope" => s.slope.to_string(),
            "synth.phi" => s.phi.to_string(),
            "synth.noise_std" => s.noise_std.to_string(),
            "synth.mixing_seed" => s.mixing_seed.to_string(),
            "synth.start" => s.start.format(TIMESTAMP_FORMAT).to_string(),
            "variants" => join(&self.variants),
            "lookbacks" => join(&self.lookbacks),
            "horizons" => self.horizons.to_string(),
            "retro" => self.retro.to_string(),
            "split" => join(&[self.split.train, self.split.val, self.split.test]),
            "seed" => self.seed.map_or(String::new(), |s| s.to_string()),
            "workers" => self.workers.to_string(),
            "lr" => t.adam.lr.to_string(),
            "beta1" => t.adam.beta1.to_string(),
            "beta2" => t.adam.beta2.to_string(),
            "eps" => t.adam.eps.to_string(),
            "max_epochs" => t.max_epochs.to_string(),
            "patience" => t.patience.to_string(),
            "patience_unit" => t.patience_unit.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "mlp_hidden" => join(&self.mlp_hidden),
            "lstm_units" => self.lstm_units.to_string(),
            "lstm_cell_activation" => self.lstm_cell_activation.to_string(),
            "mixer_blocks" => self.mixer_blocks.to_string(),
            "mixer_token_hidden" => self.mixer_token_hidden.to_string(),
            "mixer_channel_hidden" => self.mixer_channel_hidden.to_string(),
            "smoothing" => self.smoothing.to_string(),
            _ => unreachable!("keys come from KEYS"),
        }
    }

    /// Serializes every key; [`ExperimentConfig::parse`] reads it back.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let v = self.value_of(key);
            if key == &"seed" && v.is_empty() {
                continue;
            }
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }

    pub fn arch(&self, backbone: Backbone) -> ArchSpec {
        match backbone {
            Backbone::Mlp => ArchSpec::Mlp {
                hidden: self.mlp_hidden.clone(),
            },
            Backbone::Lstm => ArchSpec::Lstm {
                units: self.lstm_units,
                activation: self.lstm_cell_activation,
            },
            Backbone::Mixer => ArchSpec::Mixer {
                blocks: self.mixer_blocks,
                token_hidden: self.mixer_token_hidden,
                channel_hidden: self.mixer_channel_hidden,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("no variants selected".into()));
        }
        if self.lookbacks.is_empty() {
            return Err(Error::Config("no lookbacks selected".into()));
        }
        if let Some(&l) = self.lookbacks.iter().find(|&&l| l == 0 || l > self.retro) {
            return Err(Error::Config(format!(
                "lookback {l} must lie in 1..={}",
                self.retro
            )));
        }
        if self.horizons == 0 || self.workers == 0 {
            return Err(Error::Config(
                "horizons and workers must be positive".into(),
            ));
        }
        if self.mlp_hidden.contains(&0)
            || self.lstm_units == 0
            || self.mixer_blocks == 0
            || self.mixer_token_hidden == 0
            || self.mixer_channel_hidden == 0
        {
            return Err(Error::Config("architecture sizes must be positive".into()));
        }
        self.train
            .validate()
            .map_err(|e| Error::Config(format!("{e}")))?;
        if matches!(self.data, DataSource::Synthetic) {
            self.synthetic
                .validate()
                .map_err(|e| Error::Config(format!("{e}")))?;
        }
        Ok(())
    }
}
