use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tempocast::error::{Error, Result, EXIT_OK, EXIT_TRAINING, EXIT_USAGE};
use tempocast::features::{descriptor_csv, FeatureSet};
use tempocast::harness::{
    emit_report, gen_synthetic, load_frame, rebuild_table, run_grid, train_cell, write_run,
    DataSource, ExperimentConfig,
};
use tempocast::ingest::{impute_gaps, read_csv, summarize, TIMESTAMP_FORMAT};
use tempocast::metrics::{fmt_value, metrics_grid};
use tempocast::nn::TrainedModel;
use tempocast::preprocess::{make_windows, WindowSpec};
use tempocast::variant::Variant;

#[derive(Parser, Debug)]
#[command(
    name = "tempocast",
    version,
    about = "Multi-step wind-speed forecasting experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Each one overrides a config key.
#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset (desk or paper), used when no config file is given.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override any config key, e.g. `--set max_epochs=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Global seed for synthetic data and weight initialisation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lookback hours, comma-separated (one value for `train`).
    #[arg(long, global = true)]
    lookback: Option<String>,
    /// Number of forecast steps (hours).
    #[arg(long, global = true)]
    horizons: Option<usize>,
    /// History rows used by the descriptors.
    #[arg(long, global = true)]
    retro: Option<usize>,
    /// Variant tags, comma-separated, or `default` / `all`.
    #[arg(long, global = true)]
    variants: Option<String>,
    /// Grid worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Cell-state activation of the LSTM output path: tanh or softsign.
    #[arg(long, global = true)]
    lstm_cell_activation: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print per-column statistics of a CSV file.
    Stats { file: PathBuf },
    /// Generate a synthetic frame as CSV.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print rank-pooling and/or spectral descriptors of every window.
    Features {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Both)]
        kind: Kind,
    },
    /// Train one variant at one lookback and save it.
    Train {
        /// CSV input; synthetic data from the seed when omitted.
        data: Option<PathBuf>,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forecast every window of a CSV file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment grid and write its report.
    Grid {
        /// CSV input; synthetic data from the seed when omitted.
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        save_models: bool,
    },
    /// Rebuild the report of a grid run from its manifest and predictions.
    Report {
        run_dir: PathBuf,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Rp,
    Fft,
    Both,
}

impl Kind {
    fn feature_set(self) -> FeatureSet {
        match self {
            Kind::Rp => FeatureSet::Rp,
            Kind::Fft => FeatureSet::Fft,
            Kind::Both => FeatureSet::FftRp,
        }
    }
}

fn config(common: &Common, data: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(p)) => ExperimentConfig::preset(p)?,
        (None, None) => ExperimentConfig::desk(),
    };
    if let (Some(_), Some(p)) = (&common.config, &common.preset) {
        cfg.set("preset", p)?;
    }
    for pair in &common.overrides {
        cfg.set_pair(pair)?;
    }
    let flags = [
        ("lookbacks", common.lookback.clone()),
        ("horizons", common.horizons.map(|v| v.to_string())),
        ("retro", common.retro.map(|v| v.to_string())),
        ("variants", common.variants.clone()),
        ("workers", common.workers.map(|v| v.to_string())),
        ("lstm_cell_activation", common.lstm_cell_activation.clone()),
        ("seed", common.seed.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(path) = data {
        cfg.data = DataSource::Csv(path.to_path_buf());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Stats { file } => {
            config(&cli.common, Some(&file))?;
            let frame = read_csv(&file)?;
            stdout(&summarize(&frame)?.to_csv());
        }
        Command::Synth { out } => {
            let cfg = config(&cli.common, None)?;
            let frame = gen_synthetic(&cfg.synthetic, cfg.seed.unwrap_or(0))?;
            emit(&frame.to_csv(), out.as_deref())?;
        }
        Command::Features { file, kind } => {
            let cfg = config(&cli.common, Some(&file))?;
            let frame = load_frame(&cfg)?;
            // Descriptors depend only on the retrospective window, so the
            // first configured lookback fixes the origins.
            let spec = WindowSpec {
                lookback: cfg.lookbacks[0],
                horizons: cfg.horizons,
                retro: cfg.retro,
            };
            let ds = make_windows(&frame, spec)?;
            stdout(&descriptor_csv(&ds, kind.feature_set(), cfg.smoothing)?);
        }
        Command::Train { data, variant, out } => {
            let cfg = config(&cli.common, data.as_deref())?;
            let &[lookback] = cfg.lookbacks.as_slice() else {
                return Err(Error::Config("train needs exactly one --lookback".into()));
            };
            if cfg.seed.is_none() {
                return Err(Error::Config("train needs --seed".into()));
            }
            let frame = load_frame(&cfg)?;
            let (model, d) = train_cell(&frame, &cfg, variant, lookback)?;
            std::fs::write(&out, model.save()).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let preds = BTreeMap::from([((variant, lookback), model.predict(&d.test)?)]);
            let truth = BTreeMap::from([(lookback, d.test.targets())]);
            let table = metrics_grid(&preds, &truth, &[variant], &[lookback], &BTreeMap::new())?;
            stdout(&table.to_csv());
            eprintln!(
                "saved {variant} at lookback {lookback} to {}",
                out.display()
            );
        }
        Command::Predict { model, data, out } => {
            let bytes = std::fs::read(&model).map_err(|e| Error::Io {
                path: model.clone(),
                source: e,
            })?;
            let model = TrainedModel::load(&bytes)?;
            let cfg = config(&cli.common, Some(&data))?;
            let (frame, _) = impute_gaps(&read_csv(&data)?, cfg.gap_policy)?;
            let ds = make_windows(&frame, model.window)?;
            let p = model.predict(&ds)?;
            let mut text = String::from("origin_time");
            for h in 1..=p.rows() {
                text.push_str(&format!(",step_{h}"));
            }
            text.push('\n');
            for (j, s) in ds.samples.iter().enumerate() {
                text.push_str(&s.origin_time.format(TIMESTAMP_FORMAT).to_string());
                for h in 0..p.rows() {
                    text.push(',');
                    text.push_str(&fmt_value(p.get(h, j)));
                }
                text.push('\n');
            }
            emit(&text, out.as_deref())?;
        }
        Command::Grid {
            data,
            out,
            save_models,
        } => {
            let cfg = config(&cli.common, data.as_deref())?;
            if cfg.seed.is_none() {
                return Err(Error::Config("grid needs --seed".into()));
            }
            let result = run_grid(&cfg)?;
            for path in write_run(&result, &cfg, &out, save_models)? {
                eprintln!("wrote {}", path.display());
            }
            stdout(&result.table.to_csv());
            if result.has_failures() {
                for ((v, l), e) in &result.failures {
                    eprintln!("failed: {v} at lookback {l}: {e}");
                }
                return Ok(EXIT_TRAINING);
            }
        }
        Command::Report { run_dir, out } => {
            let (_, table) = rebuild_table(&run_dir)?;
            let has_baseline = table.variants.contains(&"MLP".parse::<Variant>()?);
            let dir = out.unwrap_or(run_dir);
            for path in emit_report(&table, &dir, has_baseline)? {
                eprintln!("wrote {}", path.display());
            }
            if !table.failed_cells().is_empty() {
                return Ok(EXIT_TRAINING);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_USAGE as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
