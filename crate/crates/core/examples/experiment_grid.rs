//! Runs a reduced experiment grid on synthetic data and writes the report
//! files to a temporary directory.
//!
//! ```text
//! cargo run --release --example experiment_grid -- [seed] [variants] [lookbacks]
//! ```

use std::time::Instant;

use tempocast::harness::{run_grid, write_run, ExperimentConfig};

fn main() -> tempocast::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ExperimentConfig::desk();
    cfg.set("seed", args.first().map_or("1", String::as_str))?;
    cfg.set(
        "variants",
        args.get(1)
            .map_or("MLP,FFT-MLP,RP-MLP,LR-FFT-RP-MLP", String::as_str),
    )?;
    cfg.set("lookbacks", args.get(2).map_or("4,8", String::as_str))?;

    let started = Instant::now();
    let out = run_grid(&cfg)?;
    println!("{} cells in {:.1?}", out.table.len(), started.elapsed());
    print!("{}", out.table.to_csv());

    for (&l, persistence) in &out.persistence {
        let truth = &out.truth[&l];
        let mae = tempocast::metrics::mae(persistence.row(0), truth.row(0))?;
        let mean_mae = tempocast::metrics::mae(out.mean[&l].row(0), truth.row(0))?;
        println!(
            "lookback {l}: persistence MAE {mae:.3}, mean-predictor MAE {mean_mae:.3} at step 1"
        );
    }

    let dir = std::env::temp_dir().join("tempocast-grid-example");
    for path in write_run(&out, &cfg, &dir, false)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
