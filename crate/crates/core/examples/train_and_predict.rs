//! Trains one variant on synthetic data, saves it, reloads it and scores the
//! held-out block against persistence.
//!
//! ```text
//! cargo run --release --example train_and_predict -- [variant] [lookback]
//! ```

use tempocast::harness::{gen_synthetic, persistence_baseline, train_cell, ExperimentConfig};
use tempocast::metrics::Metrics;
use tempocast::nn::TrainedModel;
use tempocast::variant::Variant;

fn main() -> tempocast::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args
        .first()
        .map_or("LR-FFT-RP-MLP", String::as_str)
        .parse()?;
    let lookback: usize = args
        .get(1)
        .map_or(Ok(8), |s| s.parse())
        .expect("lookback is an integer");

    let mut cfg = ExperimentConfig::desk();
    cfg.set("seed", "1")?;
    let frame = gen_synthetic(&cfg.synthetic, 1)?;
    let (model, data) = train_cell(&frame, &cfg, variant, lookback)?;
    for (i, b) in model.branches.iter().enumerate() {
        println!("branch {i}: best epoch {}", b.best_epoch);
    }

    let bytes = model.save();
    let model = TrainedModel::load(&bytes)?;
    println!(
        "{variant} at L={lookback}: {} bytes serialized",
        bytes.len()
    );

    let pred = model.predict(&data.test)?;
    let truth = data.test.targets();
    let naive = persistence_baseline(&data.test);
    println!("step,MAE,RMSE,persistence_MAE");
    for h in 0..truth.rows() {
        let m = Metrics::compute(pred.row(h), truth.row(h))?;
        let p = Metrics::compute(naive.row(h), truth.row(h))?;
        println!("{},{:.4},{:.4},{:.4}", h + 1, m.mae, m.rmse, p.mae);
    }
    Ok(())
}
