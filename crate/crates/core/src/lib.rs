//! Multi-step wind-speed forecasting: rank-pooling and spectral descriptors
//! feeding small neural regressors, least-squares fusion of branch forecasts,
//! and an experiment grid with reporting.
//!
//! ```no_run
//! use tempocast::prelude::*;
//!
//! let frame = gen_synthetic(&SyntheticSpec::default(), 7).unwrap();
//! let ds = make_windows(&frame, WindowSpec::new(8)).unwrap();
//! let (train, val, test) = split_chronological(&ds, SplitFractions::default()).unwrap();
//! let model = TrainedModel::train(
//!     "LR-FFT-RP-MLP".parse().unwrap(),
//!     &ArchSpec::default_mlp(),
//!     &train,
//!     &val,
//!     &TrainConfig::desk(),
//! )
//! .unwrap();
//! let forecast = model.predict(&test).unwrap(); // 6 x n, m/s
//! # let _ = forecast;
//! ```

pub mod ensemble;
pub mod error;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod preprocess;
pub mod variant;

pub use error::{Error, Result, EXIT_DATA, EXIT_OK, EXIT_TRAINING, EXIT_USAGE};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::ensemble::{fit_fusion, fuse, FusionWeights, HorizonWeights};
    pub use crate::error::{Error, Result};
    pub use crate::features::{
        assemble_inputs, fft, multi_scale_rank_pool, rank_pool, spectral_features, FeaturePipeline,
        FeatureSet,
    };
    pub use crate::harness::{
        gen_synthetic, persistence_baseline, run_grid, ExperimentConfig, GridOutput, SyntheticSpec,
    };
    pub use crate::ingest::{
        impute_gaps, parse_records, read_csv, summarize, Channel, GapPolicy, TimeSeriesFrame,
    };
    pub use crate::matrix::Matrix;
    pub use crate::metrics::{improvement, mae, pearson_r, rmse, ResultsTable};
    pub use crate::nn::{ArchSpec, Network, TrainConfig, TrainedModel};
    pub use crate::preprocess::{
        make_windows, split_chronological, SplitFractions, WindowSpec, WindowedDataset,
    };
    pub use crate::variant::{Backbone, Variant};
}
