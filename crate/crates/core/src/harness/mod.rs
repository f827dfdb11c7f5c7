//! Experiment orchestration: configuration, synthetic data, baselines, the
//! grid runner and report files.

pub mod baseline;
pub mod config;
pub mod grid;
pub mod report;
pub mod synth;

pub use baseline::{mean_baseline, persistence_baseline};
pub use config::{DataSource, ExperimentConfig};
pub use grid::{
    load_frame, prepare_lookback, run_grid, run_grid_on, train_cell, GridOutput, LookbackData,
};
pub use report::{emit_report, parse_predictions_csv, predictions_csv, rebuild_table, write_run};
pub use synth::{gen_synthetic, SyntheticSpec};
