//! Rank-pooling descriptors on toy windows: a ramp recovers its slope,
//! reversing time negates it and an offset changes nothing.
//!
//! ```text
//! cargo run --release --example rank_pooling
//! ```

use tempocast::features::{multi_scale_rank_pool, rank_pool, RANK_POOL_SCALES, RETRO_ROWS};
use tempocast::matrix::Matrix;

fn main() -> tempocast::Result<()> {
    // Channel c rises by c + 1 per hour; channel 7 is constant.
    let ramp = Matrix::from_fn(RETRO_ROWS, 8, |r, c| {
        if c == 7 {
            5.0
        } else {
            (c + 1) as f64 * r as f64
        }
    });
    let slopes = rank_pool(&ramp, false)?;
    println!("slopes on a ramp: {slopes:?}");

    let reversed = Matrix::from_fn(RETRO_ROWS, 8, |r, c| ramp.get(RETRO_ROWS - 1 - r, c));
    println!("reversed:         {:?}", rank_pool(&reversed, false)?);

    let shifted = Matrix::from_fn(RETRO_ROWS, 8, |r, c| ramp.get(r, c) + 100.0);
    println!("shifted by 100:   {:?}", rank_pool(&shifted, false)?);

    // Each scale pools the most recent rows only. A level change 6 hours ago
    // is invisible at scale 4, which sees only the new level, and diluted at
    // the longer scales.
    let step = Matrix::from_fn(
        RETRO_ROWS,
        8,
        |r, _| if r >= RETRO_ROWS - 6 { 1.0 } else { 0.0 },
    );
    let pooled = multi_scale_rank_pool(&step, false)?;
    for (i, s) in RANK_POOL_SCALES.iter().enumerate() {
        println!("scale {s:>2}: channel 0 slope {:.4}", pooled[i * 8]);
    }
    Ok(())
}
