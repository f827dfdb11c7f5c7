//! Reads a station CSV, fills hourly gaps and prints per-channel statistics.
//!
//! ```text
//! cargo run --release --example ingest_stats -- [path.csv]
//! ```
//!
//! Without a path a synthetic series is generated and a few hours are
//! removed first so the gap filler has something to do.

use tempocast::harness::{gen_synthetic, SyntheticSpec};
use tempocast::ingest::{impute_gaps, parse_records, read_csv, summarize, GapPolicy};

fn main() -> tempocast::Result<()> {
    let frame = match std::env::args().nth(1) {
        Some(path) => read_csv(path)?,
        None => {
            let full = gen_synthetic(&SyntheticSpec::default(), 7)?;
            let text: String = full
                .to_csv()
                .lines()
                .enumerate()
                .filter(|(i, _)| !(100..104).contains(i))
                .map(|(_, l)| format!("{l}\n"))
                .collect();
            parse_records(&text)?
        }
    };
    println!(
        "{} rows, regular hourly: {}",
        frame.len(),
        frame.is_regular()
    );

    let (filled, report) = impute_gaps(&frame, GapPolicy::ForwardFill)?;
    println!(
        "inserted {} hours, filled {} cells, {} rows after filling",
        report.gap_count(),
        report.filled_cells,
        filled.len()
    );
    print!("{}", summarize(&filled)?.to_csv());
    Ok(())
}
